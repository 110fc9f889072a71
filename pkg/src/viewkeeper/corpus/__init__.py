"""The university schema and the two results views used in the experiments."""

from importlib import resources


def read(name: str) -> str:
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def path(name: str):
    return resources.files(__name__).joinpath(name)
