"""Bundled benchmark: cruise-control double integrator with designed sets.

A vehicle holds position and speed relative to a virtual reference body.
The relative state drifts hands-off inside a small box S while the driver
and road act on it; the feedback loop closes only when the state leaves S.
The bundled controller and set pair were produced by the joint synthesis
procedure for n_K = 2, eta = 0.99, eps_s = 0.6 and are kept as versioned
JSON assets so verification and simulation runs are reproducible offline.
"""

from __future__ import annotations

import importlib.resources
import json

from .conditions import InvariantSets
from .controller import ControllerRealization
from .model import PlantModel, model_from_json

#: synthesis parameters the bundled design was produced with
CRUISE_ETA = 0.99
CRUISE_NK = 2


def _load(name: str) -> dict:
    ref = importlib.resources.files("handsoff") / "fixtures" / name
    with ref.open() as fh:
        return json.load(fh)


def cruise_model() -> PlantModel:
    return model_from_json(_load("cruise_model.json"))


def cruise_controller() -> ControllerRealization:
    return ControllerRealization.from_json(_load("cruise_controller.json"))


def cruise_sets() -> InvariantSets:
    return InvariantSets.from_json(_load("cruise_sets.json"))
