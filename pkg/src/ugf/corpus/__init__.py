"""Bundled formula corpus (one formula per ``.gf`` file)."""
from importlib import resources


def names() -> list:
    return sorted(p.name[:-3] for p in resources.files(__name__).iterdir()
                  if p.name.endswith(".gf"))


def text(name: str) -> str:
    lines = resources.files(__name__).joinpath(name + ".gf").read_text(encoding="utf-8")
    return " ".join(l for l in lines.splitlines() if l.strip() and not l.lstrip().startswith("#"))


def path(name: str):
    return resources.files(__name__).joinpath(name + ".gf")
