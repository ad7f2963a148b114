import logging
from . import boltzmann_solve_app


def main(config, out_dir: str) -> list:
    logging.getLogger(__name__).debug(f"boltzmann-solve writing to {out_dir}")
    return boltzmann_solve_app.app(config, out_dir)
