import logging
from . import fv_flow_app


def main(config, out_dir: str) -> list:
    logging.getLogger(__name__).debug(f"fv-flow writing to {out_dir}")
    return fv_flow_app.app(config, out_dir)
