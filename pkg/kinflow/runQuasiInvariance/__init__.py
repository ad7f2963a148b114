import logging
from . import quasi_invariance_app


def main(config, out_dir: str) -> list:
    logging.getLogger(__name__).debug(f"fv-quasi-invariance writing to {out_dir}")
    return quasi_invariance_app.app(config, out_dir)
