# services/analysis_utils.py
"""
Report storage for run stats, verification reports and tuning histories.
- upload_json_to_gcs(data, dest_path): gs://$GRAPHWEAVE_BUCKET/<dest_path> when a bucket is
  configured, otherwise a file under $GRAPHWEAVE_ARTIFACTS
- with_schema(doc): stamps the report schema version
"""

import json
import logging
import os
from typing import Any, Dict, Optional

from google.cloud import storage

logger = logging.getLogger(__name__)

BUCKET = os.environ.get("GRAPHWEAVE_BUCKET")
ARTIFACTS_DIR = os.environ.get("GRAPHWEAVE_ARTIFACTS", "artifacts")
SCHEMA_VERSION = 1

_client: Optional[storage.Client] = None


def gcs_client() -> Optional[storage.Client]:
    """Lazily built client; None when no bucket is configured or credentials are missing."""
    global _client
    if not BUCKET:
        return None
    if _client is None:
        try:
            _client = storage.Client()
        except Exception as e:
            logger.warning("[Storage] GCS client unavailable (%s); using %s", e, ARTIFACTS_DIR)
            return None
    return _client


def local_artifact_path(dest_path: str) -> str:
    path = os.path.join(ARTIFACTS_DIR, dest_path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    return path


def with_schema(doc: Dict[str, Any]) -> Dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, **doc}


def upload_json_to_gcs(data: Dict[str, Any], dest_path: str) -> str:
    client = gcs_client()
    if client is not None:
        try:
            blob = client.bucket(BUCKET).blob(dest_path)
            blob.upload_from_string(json.dumps(data, indent=2), content_type="application/json")
            return f"gs://{BUCKET}/{dest_path}"
        except Exception as e:
            logger.warning("[Storage] upload of %s failed: %s", dest_path, e)
    local_path = local_artifact_path(dest_path)
    with open(local_path, "w") as f:
        json.dump(data, f, indent=2)
    logger.info("[Storage] wrote %s", local_path)
    return local_path
