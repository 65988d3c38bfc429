from rectsv.cli import main
import sys

sys.exit(main())
