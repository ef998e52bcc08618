from msreach.cli import main

raise SystemExit(main())
