"""Candidate admission days per flexible patient."""
from __future__ import annotations

from typing import Dict, Optional, Tuple

from .carebounds import UNCOVERABLE, CareBoundTable, trivial_bound
from .model import Instance, InstanceError

AdmissionWindows = Dict[str, Tuple[int, ...]]


class EmptyWindowError(InstanceError):
    """A mandatory patient has no admissible day."""

    def __init__(self, patient):
        self.patient = patient
        super().__init__(f"mandatory patient {patient} has no admissible day")


def compute_windows(instance: Instance, care_bounds: Optional[CareBoundTable] = None) -> AdmissionWindows:
    """Days each flexible patient may be admitted on.

    Keeps days in ``[release, deadline or horizon end]`` on which the surgeon
    has room for the surgery and every shift of the stay has a working nurse.
    Optional patients also lose days where care bound plus delay already costs
    at least as much as postponing.
    """
    w = instance.weights
    out = {}
    for p in instance.flexible:
        cap = instance.surgeon_by_id[p.surgeon].capacity
        days = []
        for d in range(p.release_day, instance.last_admission_day(p) + 1):
            if cap[d] < p.surgery_duration:
                continue
            care = care_bounds[p.id, d] if care_bounds is not None else trivial_bound(instance, p, d)
            if care == UNCOVERABLE:
                continue
            if p.is_optional and care + w.delay * (d - p.release_day) >= w.unscheduled:
                continue
            days.append(d)
        if p.is_mandatory and not days:
            raise EmptyWindowError(p.id)
        out[p.id] = tuple(days)
    return out
