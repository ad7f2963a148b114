import logging
from . import derivative_check_app


def main(config, out_dir: str) -> list:
    logging.getLogger(__name__).debug(f"boltzmann-derivative-check writing to {out_dir}")
    return derivative_check_app.app(config, out_dir)
