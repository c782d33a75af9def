"""Access to the model and observable files shipped with the package."""

from importlib import resources


def fixture_path(name):
    """Absolute path of a shipped fixture file (JSON)."""
    return str(resources.files("covercorr").joinpath("fixtures", name))


def fixture_names():
    base = resources.files("covercorr").joinpath("fixtures")
    return sorted(p.name for p in base.iterdir() if p.name.endswith(".json"))
