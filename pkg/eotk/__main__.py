from eotk.cli import main

raise SystemExit(main())
