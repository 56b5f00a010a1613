from celery.utils.log import get_task_logger

from .celery_worker import celery_app
from app.schemas.report_payload import VerificationReport
from app.schemas.suite_payload import SuiteConfig
from app.verify import run_suite

logger = get_task_logger(__name__)


def _error_report(check_id: str, error: Exception) -> dict:
    return VerificationReport(
        check_id=check_id,
        anchor="task",
        hypothesis_met=True,
        passed=False,
        flags=["error", type(error).__name__],
    ).to_record()


@celery_app.task
def run_suite_task(config_json: str) -> list[dict]:
    """Run a suite in the worker and return the report records."""
    try:
        config = SuiteConfig.model_validate_json(config_json)
        reports = run_suite(config)
        logger.info("suite finished with %d reports", len(reports))
        return [report.to_record() for report in reports]
    except Exception as e:
        logger.error("suite task failed: %s", e)
        return [_error_report("suite", e)]


@celery_app.task
def run_check_task(check_id: str, config_json: str) -> list[dict]:
    """Run one check family or check id in the worker."""
    try:
        config = SuiteConfig.model_validate_json(config_json)
        reports = run_suite(config, selector=check_id)
        if not reports:
            logger.warning("no check matches %s", check_id)
        return [report.to_record() for report in reports]
    except Exception as e:
        logger.error("check task %s failed: %s", check_id, e)
        return [_error_report(check_id, e)]
