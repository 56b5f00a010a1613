"""Fitted constants for the '<~' checks, computed once over the smooth gallery and frozen in a JSON file."""
import json
import logging
import os
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field

from app import config as settings
from app.core import parallel_map
from app.errors import CalibrationError
from app.jacobian import apriori_bound_check
from app.maps import SMOOTH_GALLERY, TestFunction, gallery, rotation_distortion
from app.schemas.domain_payload import Domain, QuadratureSpec
from app.schemas.result_payload import FractionalParams
from app.schemas.suite_payload import SuiteConfig
from app.sobolev import extension_equivalence_check, modulus_bound_check, restriction_inequality_check

logger = logging.getLogger(__name__)

CONSTANTS_VERSION = 2
FAMILIES = ("restriction", "apriori", "extension", "modulus")
# report quantity each family is fitted on
FITTED_QUANTITY = {"restriction": "ratio", "apriori": "ratio", "extension": "spread", "modulus": "max_ratio"}
# distortions of curl-free maps exercised by the continuity pathway
PATHWAY_MAPS = ("gradient-quartic", "identity")
PATHWAY_DELTAS = (0.3, 0.1, 0.03)


class CalibrationConstants(BaseModel):
    version: int = CONSTANTS_VERSION
    seed: int
    resolutions: list[int]
    constants: dict[str, dict[str, float]] = Field(default_factory=dict)

    def constant(self, family: str, s: float) -> float:
        try:
            return self.constants[family][s_key(s)]
        except KeyError:
            raise CalibrationError(f"no fitted {family} constant for s = {s:g}") from None

    def covers(self, config: SuiteConfig) -> bool:
        return (
            self.seed == config.seed
            and self.resolutions == list(config.resolutions)
            and all(s_key(s) in self.constants.get(family, {}) for family in FAMILIES for s in config.s_values)
        )


def s_key(s: float) -> str:
    return f"{s:.6g}"


def unit_disk() -> Domain:
    return Domain.ball((0.0, 0.0), 1.0)


def standard_bump() -> TestFunction:
    return TestFunction(center=(0.0, 0.0), radius=0.5)


def calibration_maps(family: str):
    maps = [gallery(name) for name in SMOOTH_GALLERY]
    if family == "modulus":
        maps += [rotation_distortion(gallery(name), delta) for name in PATHWAY_MAPS for delta in PATHWAY_DELTAS]
    return maps


def run_regression(family: str, f, s: float, config: SuiteConfig, constant: Optional[float] = None):
    """Run one fitted-constant check; the same call serves calibration (constant None) and regression."""
    ball = unit_disk()
    params = FractionalParams.critical(s, config.n)
    quad = QuadratureSpec(sample_count=config.resolution, seed=config.seed)
    if family == "restriction":
        return restriction_inequality_check(f, ball, params, quad=quad, constant=constant)
    if family == "apriori":
        return apriori_bound_check(f, standard_bump(), s, ball, config.eps_seq, quad, constant=constant)
    if family == "extension":
        return extension_equivalence_check(f, ball, params, quad=quad, constant=constant)
    if family == "modulus":
        return modulus_bound_check(f, ball, params, quad=quad, constant=constant)
    raise CalibrationError(f"unknown calibration family {family!r}")


def fit_constants(config: SuiteConfig) -> CalibrationConstants:
    fitted: dict[str, dict[str, float]] = {}
    for family in FAMILIES:
        fitted[family] = {}
        for s in config.s_values:
            reports = parallel_map(lambda f: run_regression(family, f, s, config), calibration_maps(family))
            ratios = [r.quantities.get(FITTED_QUANTITY[family]) for r in reports]
            ratios = [value for value in ratios if value is not None]
            if not ratios:
                raise CalibrationError(f"the {family} family produced no finite ratios")
            fitted[family][s_key(s)] = max(ratios)
            logger.info("calibrated %s at s=%g: %.6g", family, s, fitted[family][s_key(s)])
    return CalibrationConstants(seed=config.seed, resolutions=list(config.resolutions), constants=fitted)


def constants_path(config: SuiteConfig) -> Path:
    return Path(config.constants_path or settings.CONSTANTS_PATH)


def save_constants(constants: CalibrationConstants, path: Path) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    path.write_text(json.dumps(constants.model_dump(), indent=2, sort_keys=True) + "\n")


def load_constants(path: Path) -> CalibrationConstants:
    path = Path(path)
    if not path.exists():
        raise CalibrationError(f"constants file {path} does not exist; run the calibration first")
    constants = CalibrationConstants.model_validate_json(path.read_text())
    if constants.version != CONSTANTS_VERSION:
        raise CalibrationError(f"constants file {path} has version {constants.version}, expected {CONSTANTS_VERSION}")
    return constants


def calibrate(config: SuiteConfig, path: Optional[Path] = None) -> CalibrationConstants:
    constants = fit_constants(config)
    save_constants(constants, path or constants_path(config))
    return constants


def ensure_constants(config: SuiteConfig) -> CalibrationConstants:
    """Load the frozen constants, calibrating first when the file is missing or does not cover the config."""
    path = constants_path(config)
    try:
        constants = load_constants(path)
    except CalibrationError as error:
        logger.warning("%s; calibrating", error)
        return calibrate(config, path)
    if not constants.covers(config):
        logger.warning("constants in %s were fitted for another configuration; recalibrating", path)
        return calibrate(config, path)
    return constants
