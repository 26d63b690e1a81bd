"""
Service Parameters Configuration

This module provides request parameter sets for each external service and
per-preset generation settings for the summarizer.
"""

from typing import Any, Dict, Optional


# Base parameter sets sent with every request to a service
SERVICE_BASE_PARAMS = {
    "transcriber": {
        "task": "transcribe",
        "timestamps": "segment",
    },
    "ocr": {
        "image_format": "png",
    },
    "summarizer": {
        "max_tokens": 512,
        "temperature": 0.2,
        "top_p": 1.0,
    },
    "embedder": {
        "normalize": True,
    },
    "pair_scorer": {},
    "web_search": {
        "max_results": 5,
    },
    "zero_shot": {
        "multi_label": True,
    },
    "playlist_search": {
        "max_results": 1,
    },
}

# Preset-specific generation adjustments
PRESET_PARAMS = {
    "video_summary": {
        "temperature": 0.2,
        "max_tokens": 300,
    },
    "playlist_synopsis": {
        "temperature": 0.3,   # merges several video summaries
        "max_tokens": 500,
    },
    "web_page_digest": {
        "temperature": 0.2,
        "max_tokens": 250,
    },
    "web_digest": {
        "temperature": 0.3,
        "max_tokens": 500,
    },
    "paper_summary": {
        "temperature": 0.1,
        "max_tokens": 300,
    },
    "paper_synopsis": {
        "temperature": 0.2,
        "max_tokens": 500,
    },
    "rag_answer": {
        "temperature": 0.0,   # answers only from retrieved chunks
        "max_tokens": 400,
    },
    "final_fusion": {
        "temperature": 0.2,
        "max_tokens": 600,
    },
}


def get_service_params(service: str, preset: Optional[str] = None) -> Dict[str, Any]:
    """
    Get the request parameters for a service call.

    Args:
        service: Service name (e.g., "summarizer", "ocr")
        preset: Optional summarizer preset name

    Returns:
        Dictionary of request parameters
    """
    params = dict(SERVICE_BASE_PARAMS.get(service, {}))
    if preset is not None:
        params.update(PRESET_PARAMS.get(preset, {}))
    return params
