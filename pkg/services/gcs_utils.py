# services/gcs_utils.py
# Plain-text results (vector TSVs) stored next to the JSON reports.
import logging

from services import analysis_utils

logger = logging.getLogger(__name__)


def upload_text(text: str, dest_path: str) -> str:
    client = analysis_utils.gcs_client()
    if client is not None:
        try:
            client.bucket(analysis_utils.BUCKET).blob(dest_path).upload_from_string(text)
            return f"gs://{analysis_utils.BUCKET}/{dest_path}"
        except Exception as e:
            logger.warning("[Storage] upload of %s failed: %s", dest_path, e)
    target = analysis_utils.local_artifact_path(dest_path)
    with open(target, "w") as f:
        f.write(text)
    return target
