"""Allow ``python -m spinbath`` as an alias for the console script."""

from spinbath.cli import main_entry

main_entry()
