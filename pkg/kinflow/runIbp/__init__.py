import logging
from . import ibp_app


def main(config, out_dir: str) -> list:
    logging.getLogger(__name__).debug(f"fv-ibp writing to {out_dir}")
    return ibp_app.app(config, out_dir)
