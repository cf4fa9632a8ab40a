"""
Allow ``python -m purekge``
"""

import sys

from purekge.cli import main

sys.exit(main())
