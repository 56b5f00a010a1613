from fastapi import APIRouter, HTTPException

from app.errors import ToolkitError, UnknownMapError
from app.jacobian import curl_pairing, jac_pairing, sign_classify
from app.maps import TestFunction
from app.schemas.domain_payload import Domain, QuadratureSpec
from app.schemas.result_payload import PairingResult, SignClassification
from app.schemas.suite_payload import ClassifyRequest, PairingRequest

router = APIRouter()


def _setup(payload: PairingRequest):
    phi = TestFunction(center=payload.phi_center, radius=payload.phi_radius)
    domain = Domain.ball((0.0, 0.0), payload.domain_radius)
    return phi, domain, QuadratureSpec(sample_count=payload.sample_count)


@router.post("/pairing", response_model=PairingResult)
def pairing(payload: PairingRequest):
    try:
        phi, domain, quad = _setup(payload)
        return jac_pairing(payload.map.build(), phi, domain, payload.eps, quad)
    except UnknownMapError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except ToolkitError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/curl")
def curl(payload: PairingRequest):
    try:
        phi, domain, quad = _setup(payload)
        value = curl_pairing(payload.map.build(), phi, domain, quad)
    except UnknownMapError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except ToolkitError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return {"curl": value, "phi_integral": phi.integral()}


@router.post("/classify", response_model=SignClassification)
def classify(payload: ClassifyRequest):
    try:
        domain = Domain.ball((0.0, 0.0), payload.domain_radius)
        quad = QuadratureSpec(sample_count=payload.sample_count)
        return sign_classify(payload.map.build(), domain, None, payload.eps, quad)
    except UnknownMapError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except ToolkitError as e:
        raise HTTPException(status_code=400, detail=str(e))
