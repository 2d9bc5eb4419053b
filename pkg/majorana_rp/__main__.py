"""Entry point for cli, enables execution with `python -m majorana_rp`"""

from .cli import cli

if __name__ == "__main__":
    cli()
