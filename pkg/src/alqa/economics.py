"""Labeling-cost arithmetic: images saved -> annotator time saved."""

from __future__ import annotations

from dataclasses import dataclass

from alqa.errors import ContractError

DEFAULT_LABEL_SECONDS = 31.0
DEFAULT_WORKDAY_HOURS = 8.0
DEFAULT_N_MODELS = 18


@dataclass(frozen=True)
class Savings:
    """Touchpoint difference between the baseline and the AL curve."""

    images_saved: int  # negative when AL needed more labels
    fraction: float  # of the baseline touchpoint

    def to_dict(self) -> dict:
        return {"images_saved": self.images_saved, "fraction": self.fraction}


@dataclass(frozen=True)
class EconomicsReport:
    images_saved: int
    avg_label_seconds: float
    workday_hours: float
    n_models: int
    hours_saved: float
    person_days_per_model: float
    fleet_days: float

    def to_dict(self) -> dict:
        return {
            "images_saved": self.images_saved,
            "avg_label_seconds": self.avg_label_seconds,
            "workday_hours": self.workday_hours,
            "n_models": self.n_models,
            "hours_saved": self.hours_saved,
            "person_days_per_model": self.person_days_per_model,
            "fleet_days": self.fleet_days,
        }


def savings(al_touch: int, random_touch: int) -> Savings:
    """Images saved by reaching the target earlier than the baseline."""
    if al_touch < 1 or random_touch < 1:
        raise ContractError("touchpoint label counts must be >= 1")
    saved = random_touch - al_touch
    return Savings(images_saved=saved, fraction=saved / random_touch)


def economics(
    images_saved: int,
    avg_label_seconds: float = DEFAULT_LABEL_SECONDS,
    workday_hours: float = DEFAULT_WORKDAY_HOURS,
    n_models: int = DEFAULT_N_MODELS,
) -> EconomicsReport:
    """Convert an image-count saving into person-time; values stay unrounded."""
    if images_saved < 0:
        raise ContractError(f"images_saved must be >= 0, got {images_saved}")
    hours = images_saved * avg_label_seconds / 3600.0
    person_days = hours / workday_hours
    return EconomicsReport(
        images_saved=images_saved,
        avg_label_seconds=avg_label_seconds,
        workday_hours=workday_hours,
        n_models=n_models,
        hours_saved=hours,
        person_days_per_model=person_days,
        fleet_days=person_days * n_models,
    )
