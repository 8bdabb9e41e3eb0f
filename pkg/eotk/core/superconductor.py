"""Mattis-Bardeen response of a thin superconducting film.

Gap equation, complex conductivity, surface impedance, quasiparticle density and
lifetime, and the frequency / quality-factor shift they induce on a resonator.
All integrals with inverse-square-root endpoint singularities are evaluated after
a substitution that removes the singularity (E = Delta cosh u on semi-infinite
ranges, a cosine map on the finite sigma2 interval).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import expit

from eotk.core.quantities import CONSTANTS, TWO_PI, SuperconductorParams, aluminum_film
from eotk.exceptions import DegenerateInputError, DomainError, NumericalError, OutOfRegimeError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)

# Fermi factor cut-off: exp(-41.45) ~ 1e-18 of its value at the gap edge
FERMI_CUTOFF=41.45

QUAD_EPSREL=1e-11
QUAD_LIMIT=400

# Lower temperature bracket of every inverse solver
T_FLOOR=1e-3


@dataclass(frozen=True)
class GapState:
    temperature: float
    gap: float


@dataclass(frozen=True)
class ComplexConductivity:
    """sigma = sigma1 - i sigma2 (S/m) at angular frequency `omega` and bath temperature `T`."""

    sigma1: float
    sigma2: float
    omega: float
    T: float
    gap: float


@dataclass(frozen=True)
class SurfaceImpedance:
    Rs: float
    Ls: float


@dataclass(frozen=True)
class QuasiparticleState:
    density: float
    temperature: float
    lifetime: float
    frequency_shift: float = 0.0


@dataclass(frozen=True)
class ResonatorState:
    """Resonator observables at one quasiparticle bath temperature."""

    temperature: float
    f0: float
    q_qp: float
    alpha_k: float
    surface: SurfaceImpedance


def _fermi(energy: float | np.ndarray, temperature: float)->float | np.ndarray:
    return expit(-np.asarray(energy)/(CONSTANTS.kB*temperature))


def _quad(func, lower: float, upper: float, label: str, **kwargs)->float:
    value, abserr=quad(func, lower, upper, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, **kwargs)
    if not math.isfinite(value):
        raise NumericalError(f"{label}: quadrature returned {value}", {"lower": lower, "upper": upper, "abserr": abserr})
    return value


# ============== Gap ==============


def _gap_residual(delta: float, temperature: float, p: SuperconductorParams)->float:
    debye_energy=CONSTANTS.kB*p.debye_temperature
    u_max=math.acosh(debye_energy/delta)
    two_kt=2.0*CONSTANTS.kB*temperature
    integral=_quad(lambda u: math.tanh(delta*math.cosh(u)/two_kt), 0.0, u_max, "gap equation")
    return integral-1.0/p.NV_coupling


@lru_cache(maxsize=4096)
def _gap(p: SuperconductorParams, temperature: float)->float:
    if temperature<=0:
        return p.Delta0
    if temperature>=p.Tc:
        return 0.0
    if _gap_residual(p.Delta0, temperature, p)>=0:
        return p.Delta0
    lower=1e-12*p.Delta0
    if _gap_residual(lower, temperature, p)<=0:
        # above the calibrated model's own transition temperature
        return 0.0
    try:
        return brentq(_gap_residual, lower, p.Delta0, args=(temperature, p), xtol=1e-16*p.Delta0, rtol=1e-14, maxiter=200)
    except (RuntimeError, ValueError) as exc:
        raise NumericalError(
            f"gap equation did not converge at T={temperature} K",
            {"temperature": temperature, "bracket": [lower, p.Delta0], "reason": str(exc)},
        ) from exc


def gap_at_temperature(p: SuperconductorParams, T: float)->GapState:
    """Solve the BCS gap equation for Delta(T).

    Args:
        p: Film parameters; `p.NV_coupling` is calibrated so that Delta(0) = Delta0
        T: Bath temperature in K

    Returns:
        GapState with the gap in joules (zero at and above Tc)

    Raises:
        DomainError: negative temperature
        NumericalError: root bracket failure
    """
    if T<0 or not math.isfinite(T):
        raise DomainError(f"temperature must be >= 0, got {T}")
    return GapState(temperature=T, gap=_gap(p, float(T)))


def regime_edge_temperature(p: SuperconductorParams, omega: float)->float:
    """Highest temperature at which hbar*omega stays below the pair-breaking edge 2 Delta(T)."""
    photon=CONSTANTS.hbar*omega
    if photon>=2.0*p.Delta0:
        raise OutOfRegimeError(f"hbar*omega = {photon:.4g} J exceeds 2 Delta0 at every temperature")
    # keep a small margin below the edge where the sigma2 integrand degenerates
    target=0.5*photon*(1.0+1e-6)

    def residual(T: float)->float:
        return _gap(p, T)-target

    return brentq(residual, T_FLOOR, p.Tc*(1.0-1e-12), xtol=1e-12)


# ============== Conductivity ==============


def _sigma1_ratio(delta: float, photon: float, T: float)->float:
    if T<=0:
        return 0.0
    kt=CONSTANTS.kB*T
    w=photon/delta
    u_max=math.acosh(1.0+FERMI_CUTOFF*kt/delta)

    def integrand(u: float)->float:
        e=math.cosh(u)
        energy=delta*e
        occupation=_fermi(energy, T)-_fermi(energy+photon, T)
        return (e*e+1.0+w*e)/math.sqrt((e+w)**2-1.0)*float(occupation)

    return 2.0/w*_quad(integrand, 0.0, u_max, "sigma1")


def _sigma2_ratio(delta: float, photon: float, T: float)->float:
    w=photon/delta
    half_over_kt=math.inf if T<=0 else delta/(2.0*CONSTANTS.kB*T)

    def integrand(theta: float)->float:
        e=1.0-0.5*w*(1.0+math.cos(theta))
        pair=1.0 if math.isinf(half_over_kt) else math.tanh((e+w)*half_over_kt)
        return (e*e+1.0+w*e)*pair/math.sqrt((e+w+1.0)*(1.0+e))

    return _quad(integrand, 0.0, math.pi, "sigma2")/w


def complex_conductivity(p: SuperconductorParams, omega: float, T: float)->ComplexConductivity:
    """Mattis-Bardeen sigma1 and sigma2 for a thermal quasiparticle distribution.

    Raises:
        OutOfRegimeError: hbar*omega >= 2 Delta(T) (pair breaking is not modeled)
    """
    if not omega>0:
        raise DomainError(f"omega must be positive, got {omega}")
    gap=gap_at_temperature(p, T).gap
    photon=CONSTANTS.hbar*omega
    if photon>=2.0*gap:
        raise OutOfRegimeError(
            f"hbar*omega ({photon/CONSTANTS.e_charge*1e6:.2f} ueV) >= 2 Delta(T) "
            f"({2*gap/CONSTANTS.e_charge*1e6:.2f} ueV) at T={T} K",
            {"omega": omega, "T": T, "gap": gap},
        )
    sigma1=p.sigma_n*_sigma1_ratio(gap, photon, T)
    sigma2=p.sigma_n*_sigma2_ratio(gap, photon, T)
    return ComplexConductivity(sigma1=sigma1, sigma2=sigma2, omega=omega, T=T, gap=gap)


def surface_impedance(p: SuperconductorParams, cond: ComplexConductivity)->SurfaceImpedance:
    """Thin-film dirty-limit surface impedance.

    Z_s = sqrt(i mu0 omega / sigma) * coth(d sqrt(i omega mu0 sigma)), sigma = sigma1 - i sigma2.
    """
    sigma=complex(cond.sigma1, -cond.sigma2)
    mu0=CONSTANTS.mu0
    wavenumber=np.sqrt(1j*cond.omega*mu0*sigma)
    z=np.sqrt(1j*mu0*cond.omega/sigma)/np.tanh(p.film_thickness*wavenumber)
    rs=0.0 if cond.sigma1==0 else max(float(z.real), 0.0)
    return SurfaceImpedance(Rs=rs, Ls=float(z.imag)/cond.omega)


def penetration_depth(cond: ComplexConductivity)->float:
    """Effective penetration depth 1/Re sqrt(i omega mu0 sigma)."""
    wavenumber=np.sqrt(1j*cond.omega*CONSTANTS.mu0*complex(cond.sigma1, -cond.sigma2))
    return 1.0/float(wavenumber.real)


# ============== Quasiparticles ==============


def qp_density(p: SuperconductorParams, T: float)->float:
    """Thermal quasiparticle density n_qp = 4 N0 int E/sqrt(E^2-Delta^2) f(E) dE, in um^-3."""
    if T<0:
        raise DomainError(f"temperature must be >= 0, got {T}")
    if T==0:
        return 0.0
    kt=CONSTANTS.kB*T
    delta=gap_at_temperature(p, T).gap
    if delta==0.0:
        return 4.0*p.N0*kt*math.log(2.0)
    u_max=math.acosh(1.0+FERMI_CUTOFF*kt/delta)
    integral=_quad(lambda u: math.cosh(u)*float(_fermi(delta*math.cosh(u), T)), 0.0, u_max, "qp density")
    return 4.0*p.N0*delta*integral


def qp_density_low_temperature(p: SuperconductorParams, T: float)->float:
    """Low-temperature asymptote 2 N0 sqrt(2 pi kB T Delta) exp(-Delta / kB T)."""
    if T<=0:
        return 0.0
    kt=CONSTANTS.kB*T
    delta=gap_at_temperature(p, T).gap
    return 2.0*p.N0*math.sqrt(2.0*math.pi*kt*delta)*math.exp(-delta/kt)


def qp_temperature(p: SuperconductorParams, n_qp: float)->float:
    """Bath temperature whose thermal density equals `n_qp` (bisection on [1 mK, Tc]).

    Raises:
        DomainError: negative density
        OutOfRegimeError: density above n_qp(Tc)
    """
    if n_qp<0:
        raise DomainError(f"n_qp must be >= 0, got {n_qp}")
    t_hi=p.Tc*(1.0-1e-12)
    n_hi=qp_density(p, t_hi)
    if n_qp>n_hi:
        raise OutOfRegimeError(
            f"n_qp = {n_qp:.4g} um^-3 exceeds the thermal density at Tc ({n_hi:.4g} um^-3)",
            {"n_qp": n_qp, "n_qp_at_tc": n_hi},
        )
    if n_qp<=qp_density(p, T_FLOOR):
        return T_FLOOR
    return brentq(lambda T: qp_density(p, T)-n_qp, T_FLOOR, t_hi, xtol=1e-14, rtol=1e-13, maxiter=300)


def recombination_constant(p: SuperconductorParams)->float:
    """K = tau0 N0 (kB Tc)^3 / (2 Delta0^2) in um^-3 s, so that tau_qp = K / n_qp."""
    kt_c=CONSTANTS.kB*p.Tc
    return p.tau0*p.N0*kt_c**3/(2.0*p.Delta0**2)


def qp_lifetime(p: SuperconductorParams, n_qp: float, clamp: bool | float = False)->float:
    """Recombination-limited lifetime tau_qp = K / n_qp.

    Args:
        p: Film parameters
        n_qp: Quasiparticle density in um^-3
        clamp: False for the bare law, True for the material's saturation lifetime,
            or an explicit maximum lifetime in seconds

    Raises:
        DegenerateInputError: n_qp = 0 without a clamp
    """
    if n_qp<0:
        raise DomainError(f"n_qp must be >= 0, got {n_qp}")
    limit: float | None
    if clamp is True:
        if p.tau_qp_max is None:
            raise DomainError(f"{p.name} has no saturation lifetime; pass an explicit clamp")
        limit=p.tau_qp_max
    elif clamp is False:
        limit=None
    else:
        limit=float(clamp)
        if not limit>0:
            raise DomainError(f"lifetime clamp must be positive, got {clamp}")
    if n_qp==0:
        if limit is None:
            raise DegenerateInputError("qp_lifetime is undefined at n_qp = 0 without a clamp")
        return limit
    tau=recombination_constant(p)/n_qp
    return tau if limit is None else min(tau, limit)


# ============== Resonator Shifts ==============


def resonator_response(p: SuperconductorParams, geom_alpha_k: float, f0_cold: float, T: float)->ResonatorState:
    """Frequency and quasiparticle-limited Q of a resonator with kinetic fraction `geom_alpha_k`.

    The conductivity is evaluated at the cold resonance frequency.

    Returns:
        ResonatorState with f0(T) in Hz and Q_qp(T) (infinite when Rs vanishes)
    """
    if not 0<geom_alpha_k<1:
        raise DomainError(f"alpha_k must lie in (0, 1), got {geom_alpha_k}")
    if not f0_cold>0:
        raise DomainError(f"f0_cold must be positive, got {f0_cold}")
    omega=TWO_PI*f0_cold
    cold=_cold_surface(p, omega)
    surface=surface_impedance(p, complex_conductivity(p, omega, T))
    ls_ratio=surface.Ls/cold.Ls
    inductance_ratio=(1.0-geom_alpha_k)+geom_alpha_k*ls_ratio
    alpha_t=geom_alpha_k*ls_ratio/inductance_ratio
    q_qp=math.inf if surface.Rs==0 else omega*surface.Ls/(alpha_t*surface.Rs)
    return ResonatorState(
        temperature=T,
        f0=f0_cold/math.sqrt(inductance_ratio),
        q_qp=q_qp,
        alpha_k=alpha_t,
        surface=surface,
    )


@lru_cache(maxsize=256)
def _cold_surface(p: SuperconductorParams, omega: float)->SurfaceImpedance:
    return surface_impedance(p, complex_conductivity(p, omega, 0.0))


def invert_frequency_shift(
    p: SuperconductorParams,
    geom_alpha_k: float,
    f0_cold: float,
    f0_measured: float,
    clamp: bool | float = False,
)->QuasiparticleState:
    """Quasiparticle bath temperature, density and lifetime behind a measured resonance shift.

    Raises:
        DomainError: f0_measured above f0_cold
        OutOfRegimeError: shift beyond what the model reaches below the pair-breaking edge
    """
    if f0_measured>f0_cold:
        raise DomainError(f"f0_measured ({f0_measured} Hz) must not exceed f0_cold ({f0_cold} Hz)")
    shift=f0_measured-f0_cold
    if shift==0:
        temperature=T_FLOOR
    else:
        t_edge=regime_edge_temperature(p, TWO_PI*f0_cold)
        f_edge=resonator_response(p, geom_alpha_k, f0_cold, t_edge).f0
        if f_edge>f0_measured:
            raise OutOfRegimeError(
                f"shift of {shift/1e6:.3f} MHz exceeds the model range ({(f_edge-f0_cold)/1e6:.3f} MHz)",
                {"f0_cold": f0_cold, "f0_measured": f0_measured, "t_edge": t_edge},
            )
        temperature=brentq(
            lambda T: resonator_response(p, geom_alpha_k, f0_cold, T).f0-f0_measured,
            T_FLOOR,
            t_edge,
            xtol=1e-13,
            rtol=1e-12,
            maxiter=300,
        )
    density=qp_density(p, temperature)
    if density>0 or clamp is not False:
        lifetime=qp_lifetime(p, density, clamp)
    else:
        lifetime=math.inf
    logger.debug("frequency shift inverted", shift_hz=shift, temperature=temperature, n_qp=density)
    return QuasiparticleState(density=density, temperature=temperature, lifetime=lifetime, frequency_shift=shift)


# ============== Material Catalog ==============


class MaterialPreset(BaseModel):
    """Transition temperature, saturation lifetime and penetration depth of a film material."""

    model_config=ConfigDict(frozen=True)

    name: str
    Tc_range: tuple[float, float] = Field(..., description="K")
    tau_qp_max: float = Field(..., gt=0, description="s")
    penetration_depth_range: tuple[float, float] = Field(..., description="zero-temperature lambda0, m")

    @property
    def Tc(self)->float:
        return 0.5*(self.Tc_range[0]+self.Tc_range[1])

    @property
    def penetration_depth(self)->float:
        return 0.5*(self.penetration_depth_range[0]+self.penetration_depth_range[1])


MATERIALS: dict[str, MaterialPreset]={
    "Al": MaterialPreset(name="Al", Tc_range=(1.1, 1.1), tau_qp_max=3.5e-3, penetration_depth_range=(89e-9, 89e-9)),
    "Nb": MaterialPreset(name="Nb", Tc_range=(9.2, 9.2), tau_qp_max=1e-9, penetration_depth_range=(45e-9, 45e-9)),
    "TiN": MaterialPreset(name="TiN", Tc_range=(0.7, 4.5), tau_qp_max=200e-6, penetration_depth_range=(500e-9, 3000e-9)),
    "NbTiN": MaterialPreset(name="NbTiN", Tc_range=(14.5, 14.5), tau_qp_max=1e-9, penetration_depth_range=(275e-9, 275e-9)),
}


def material(name: str)->MaterialPreset:
    try:
        return MATERIALS[name]
    except KeyError:
        raise DomainError(f"unknown material {name!r}; known: {sorted(MATERIALS)}") from None


def london_sheet_inductance(penetration_depth: float, thickness: float)->float:
    """Sheet inductance mu0 lambda0 coth(d / lambda0) in H/sq."""
    if not penetration_depth>0 or not thickness>0:
        raise DomainError("penetration depth and thickness must be positive")
    return CONSTANTS.mu0*penetration_depth/math.tanh(thickness/penetration_depth)


def film_from_preset(name: str)->SuperconductorParams:
    """Full Mattis-Bardeen record; only aluminum carries one."""
    if name=="Al":
        return aluminum_film()
    raise DomainError(f"no Mattis-Bardeen record for {name!r}; use london_sheet_inductance with material({name!r})")
