from fastapi import APIRouter, HTTPException

from app.degree import circle_trace, winding_degree
from app.errors import ToolkitError, UnknownMapError
from app.schemas.result_payload import DegreeResult
from app.schemas.suite_payload import DegreeRequest

router = APIRouter()


@router.post("/", response_model=DegreeResult)
def compute_degree(payload: DegreeRequest):
    try:
        trace = circle_trace(payload.map.build(), payload.center, payload.r, payload.samples)
        return winding_degree(trace, payload.p)
    except UnknownMapError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except ToolkitError as e:
        raise HTTPException(status_code=400, detail=str(e))
