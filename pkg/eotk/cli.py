"""CLI: electro-optic transducer toolkit

Usage examples:
  eotk report --config eotk/data/measured_device.json
  eotk sweep --config measured_device.json --set sweep.target=pump_wavelength --out wavelength.csv
  eotk fit spectrum.csv --model fano
  eotk fit decay.csv --model exponential --window 0 0.005
  eotk calibrate --signal calibration_signal.csv --dark calibration_dark.csv --window 19.9e6 20.1e6
  eotk optimize --config measured_device.json --seed 0
  eotk simulate --config measured_device.json --periods 1

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure or flagged fit.
Logs go to stderr; results go to --out or stdout.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Sequence

from dotenv import load_dotenv

from eotk import __version__
from eotk.api.schemas import apply_overrides, load_run_config, read_config_file
from eotk.config import get_settings
from eotk.core import io
from eotk.core.dynamics import TimeSeries
from eotk.core.service import ToolkitService
from eotk.exceptions import EotkError
from eotk.utils.logger import get_logger, setup_logger

logger=get_logger(__name__)

EXIT_OK=0
EXIT_FLAGGED=3


def _add_config(ap: argparse.ArgumentParser, required: bool = True)->None:
    ap.add_argument("--config", required=required, help="Path to a run configuration JSON.")
    ap.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="PATH=VALUE",
        help="Repeatable: override an existing configuration field, e.g. --set operating_point.pump_power_dbm=-20",
    )


def build_parser()->argparse.ArgumentParser:
    settings=get_settings()
    common=argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="Output file; stdout when omitted.")
    common.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="Seed for randomized procedures.")

    ap=argparse.ArgumentParser(prog="eotk", description="Electro-optic transducer toolkit.")
    ap.add_argument("--version", action="version", version=f"eotk {__version__}")
    ap.add_argument("--log-level", default=settings.LOG_LEVEL)
    sub=ap.add_subparsers(dest="command", required=True)

    report=sub.add_parser("report", parents=[common], help="Device summary with consistency checks (JSON).")
    _add_config(report)

    sweep=sub.add_parser("sweep", parents=[common], help="One-dimensional parameter sweep (CSV).")
    _add_config(sweep)
    sweep.add_argument("--workers", type=int, default=settings.SWEEP_WORKERS)

    fit=sub.add_parser("fit", parents=[common], help="Fit a spectrum or a time series (JSON).")
    fit.add_argument("path", help="Spectrum CSV (fano) or time-series CSV (exponential).")
    fit.add_argument("--model", choices=("fano", "exponential"), default="fano")
    fit.add_argument("--coupling", choices=("auto", "over", "under"), default="auto")
    fit.add_argument("--external-ports", type=int, choices=(1, 2), default=1)
    fit.add_argument("--intercept", type=float, default=0.0)
    fit.add_argument("--window", type=float, nargs=2, metavar=("START", "STOP"), default=None)
    fit.add_argument("--value-column", default=None)
    fit.add_argument("--strict", action="store_true", help="Treat a flagged fit as an error: no output, exit 3.")

    calibrate=sub.add_parser("calibrate", parents=[common], help="Heterodyne efficiency calibration (JSON).")
    _add_config(calibrate, required=False)
    calibrate.add_argument("--signal", required=True)
    calibrate.add_argument("--dark", required=True)
    calibrate.add_argument("--window", type=float, nargs=2, required=True, metavar=("LO_HZ", "HI_HZ"))
    calibrate.add_argument("--rf-power-dbm", type=float, default=None)
    calibrate.add_argument("--microwave-frequency", type=float, default=None, help="Hz")
    calibrate.add_argument("--reference-width", type=float, default=None, help="Hz")

    opt=sub.add_parser("optimize", parents=[common], help="Multi-start coordinate ascent (JSON).")
    _add_config(opt)
    opt.add_argument("--starts", type=int, default=settings.OPTIMIZER_STARTS)

    simulate=sub.add_parser("simulate", parents=[common], help="Pulsed quasiparticle response (CSV).")
    _add_config(simulate)
    simulate.add_argument("--periods", type=float, default=1.0)
    simulate.add_argument("--samples", type=int, default=2001)
    simulate.add_argument("--matrix", action="store_true", help="Emit stacked |S21|^2 traces instead.")
    simulate.add_argument("--span", type=float, default=20e6, help="Probe span around the cold resonance, Hz")
    simulate.add_argument("--points", type=int, default=201)
    return ap


def _load_config(args: argparse.Namespace):
    data=apply_overrides(read_config_file(args.config), args.overrides)
    return load_run_config(data)


def _emit(text: str, out: str | None)->None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info("output written", path=out)
    else:
        sys.stdout.write(text)


def _flagged(record: dict[str, Any])->int:
    return EXIT_OK if record.get("ok", True) else EXIT_FLAGGED


def run(args: argparse.Namespace)->int:
    service=ToolkitService()
    command=args.command
    if command=="report":
        _emit(io.render_json(service.report(_load_config(args))), args.out)
        return EXIT_OK
    if command=="sweep":
        _emit(service.sweep(_load_config(args), workers=max(args.workers, 1)), args.out)
        return EXIT_OK
    if command=="optimize":
        _emit(io.render_json(service.optimize(_load_config(args), seed=args.seed, starts=args.starts)), args.out)
        return EXIT_OK
    if command=="simulate":
        config=_load_config(args)
        if args.matrix:
            text=service.simulate_matrix(config, args.periods, args.samples, args.span, args.points)
        else:
            text=service.simulate(config, args.periods, args.samples)
        _emit(text, args.out)
        return EXIT_OK
    if command=="fit":
        window=tuple(args.window) if args.window else None
        if args.model=="fano":
            record=service.fit_fano(io.read_spectrum(args.path), args.coupling, args.external_ports, args.intercept, args.strict)
        else:
            time, values=io.read_series(args.path, args.value_column)
            record=service.fit_exponential(TimeSeries(time=time, values=values), window, args.strict)
        _emit(io.render_json(record), args.out)
        return _flagged(record)
    if command=="calibrate":
        rf_power_dbm, frequency=-31.0, 6.672e9
        if args.config:
            config=_load_config(args)
            rf_power_dbm=config.operating_point.rf_power_dbm
            frequency=config.device.microwave.frequency_hz
        record=service.calibrate(
            io.read_spectrum(args.signal),
            io.read_spectrum(args.dark),
            tuple(args.window),
            rf_power_dbm if args.rf_power_dbm is None else args.rf_power_dbm,
            frequency if args.microwave_frequency is None else args.microwave_frequency,
            args.reference_width,
        )
        _emit(io.render_json(record), args.out)
        return _flagged(record)
    raise AssertionError(f"unhandled command {command}")


def main(argv: Sequence[str] | None = None)->int:
    load_dotenv()
    args=build_parser().parse_args(argv)
    settings=get_settings()
    setup_logger(args.log_level, stream=sys.stderr, log_format=settings.LOG_FORMAT)
    logger.info("command started", command=args.command, seed=args.seed)
    try:
        code=run(args)
    except EotkError as exc:
        logger.error("command failed", command=args.command, **exc.to_dict())
        sys.stderr.write(f"eotk: error: {exc.message}\n")
        return exc.exit_code
    logger.info("command finished", command=args.command, exit_code=code)
    return code


if __name__=="__main__":
    raise SystemExit(main())
