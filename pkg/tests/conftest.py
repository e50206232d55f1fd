from dataclasses import dataclass

import pytest

from handsoff import fixtures
from handsoff.conditions import GuaranteeReport, InvariantSets, verify_all
from handsoff.controller import ControllerRealization
from handsoff.model import DerivedSets, PlantModel, derive_sets
from handsoff.tolerances import DEFAULT_TOL


@dataclass(frozen=True)
class CruiseBundle:
    model: PlantModel
    derived: DerivedSets
    controller: ControllerRealization
    sets: InvariantSets
    report: GuaranteeReport
    eta: float


@pytest.fixture(scope="session")
def cruise() -> CruiseBundle:
    """Bundled cruise-control benchmark with its verified report."""
    model = fixtures.cruise_model()
    derived = derive_sets(model)
    controller = fixtures.cruise_controller()
    sets = fixtures.cruise_sets()
    report = verify_all(model, derived, controller, sets,
                        eta=fixtures.CRUISE_ETA,
                        facet_tol=DEFAULT_TOL.published)
    return CruiseBundle(model=model, derived=derived, controller=controller,
                        sets=sets, report=report, eta=fixtures.CRUISE_ETA)
