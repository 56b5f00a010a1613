from fastapi import APIRouter, HTTPException

from app.errors import ToolkitError, UnknownMapError
from app.schemas.domain_payload import Domain, QuadratureSpec
from app.schemas.result_payload import FractionalParams
from app.schemas.suite_payload import SeminormRequest
from app.sobolev import gagliardo_seminorm

router = APIRouter()


@router.post("/")
def seminorm(payload: SeminormRequest):
    try:
        estimate = gagliardo_seminorm(
            payload.map.build(),
            Domain.ball((0.0, 0.0), payload.domain_radius),
            FractionalParams(s=payload.s, p=payload.p),
            QuadratureSpec(scheme=payload.scheme, sample_count=payload.sample_count, seed=payload.seed),
        )
    except UnknownMapError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except ToolkitError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return estimate.to_record()
