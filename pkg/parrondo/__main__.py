"""Entry point for ``python -m parrondo``."""

from parrondo.cli import main

main()
