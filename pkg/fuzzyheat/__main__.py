import sys

from fuzzyheat.cli import main

sys.exit(main())
