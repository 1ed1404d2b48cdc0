"""Access to the versioned prompt assets bundled with the package."""

from __future__ import annotations

from importlib import resources

ASSET_FILES = {
    "generation_system": "generation_system_v1.txt",
    "program_prediction": "program_prediction_v1.txt",
    "program_prediction_free": "program_prediction_free_v1.txt",
    "topic_prediction": "topic_prediction_v1.txt",
    "multi_query": "multi_query_v1.txt",
    "judge_relevance": "judge_relevance_v1.txt",
    "judge_coherence": "judge_coherence_v1.txt",
    "judge_fluency": "judge_fluency_v1.txt",
    "judge_faithfulness": "judge_faithfulness_v1.txt",
    "exemplars_default": "exemplars_default_v1.json",
}


def load_asset(name: str) -> str:
    """Return the text of a named asset at its pinned version."""
    return resources.files("ragforge.assets").joinpath(ASSET_FILES[name]).read_text(encoding="utf-8")


def asset_versions() -> dict[str, str]:
    """name -> version tag, for config fingerprints."""
    return {name: fn.rsplit("_", 1)[1].split(".")[0] for name, fn in ASSET_FILES.items()}
