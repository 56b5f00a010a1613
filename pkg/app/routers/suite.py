import logging

from fastapi import APIRouter, HTTPException

from app.errors import ToolkitError
from app.schemas.suite_payload import SuiteConfig
from app.tasks import run_check_task, run_suite_task
from app.verify import run_suite, suite_failed

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/")
def run(config: SuiteConfig):
    try:
        reports = run_suite(config)
    except ToolkitError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return {"failed": suite_failed(reports), "reports": [report.to_record() for report in reports]}


@router.post("/async")
def run_async(config: SuiteConfig):
    try:
        result = run_suite_task.apply_async((config.model_dump_json(),))
    except Exception as e:
        logger.error("Failed to enqueue suite task: %s", e)
        raise HTTPException(status_code=503, detail="Task queue unavailable")
    return {"message": "Suite queued", "task_id": result.id}


@router.post("/check/{check_id:path}")
def run_check_async(check_id: str, config: SuiteConfig):
    try:
        result = run_check_task.apply_async((check_id, config.model_dump_json()))
    except Exception as e:
        logger.error("Failed to enqueue check %s: %s", check_id, e)
        raise HTTPException(status_code=503, detail="Task queue unavailable")
    return {"message": "Check queued", "check_id": check_id, "task_id": result.id}
