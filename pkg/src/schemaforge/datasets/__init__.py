"""Small bundled datasets for demos and tests."""

from pathlib import Path

HERE = Path(__file__).parent


def toy_config() -> Path:
    """Config of the bundled person/orders toy dataset."""
    return HERE / "toy" / "toy.conf"
