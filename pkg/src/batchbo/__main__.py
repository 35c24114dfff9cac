from batchbo.bench import main

raise SystemExit(main())
