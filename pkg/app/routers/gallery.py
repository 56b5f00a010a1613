from fastapi import APIRouter, HTTPException

from app.errors import UnknownMapError
from app.maps import GALLERY_NAMES, SMOOTH_GALLERY, gallery

router = APIRouter()


@router.get("/")
def list_gallery():
    return {
        "maps": [{"name": name, "description": text} for name, text in GALLERY_NAMES.items()],
        "smooth_calibration_gallery": list(SMOOTH_GALLERY),
    }


@router.get("/{name}")
def describe_map(name: str):
    try:
        f = gallery(name)
    except UnknownMapError as e:
        raise HTTPException(status_code=404, detail=str(e))
    return {
        "label": f.label,
        "smoothness_hint": f.smoothness_hint,
        "singular_points": [list(p) for p in f.singular_points],
        "exact_differential": f.differential is not None,
    }
