"""Per-trial outcome records shared by the measurement-feedback protocols."""

from __future__ import annotations

import math
from dataclasses import dataclass


class IrreversibleEventError(ValueError):
    """An observed outcome has zero probability under the protocol's model.

    Such events carry no finite information weight; callers flag the trial
    and account for it separately instead of averaging it.
    """


@dataclass(frozen=True)
class TPMRecord:
    """Outcomes and energy bookkeeping of one two-point-measurement trial.

    The discrete protocol fills (i, k, y): the first projective outcome, the
    demon's measurement outcome and the verification outcome. The monitored
    protocol fills (z, z_prime): the initial and final projective outcomes as
    0 (ground) or 1 (excited). Unused fields are None.

    e_i, e_f : qubit energies at the two endpoints, in units of omega_q
    w : extracted work e_i - e_f, positive when the qubit ends lower
    i_qc : information weight of the trial in nats (nan when flagged)
    irreversible : True when the model assigns this outcome zero probability
    """

    e_i: float
    e_f: float
    w: float
    i_qc: float
    i: str | None = None
    k: str | None = None
    y: str | None = None
    z: int | None = None
    z_prime: int | None = None
    irreversible: bool = False

    def __post_init__(self):
        if abs(self.w - (self.e_i - self.e_f)) > 1e-12:
            raise ValueError(
                f"work {self.w} does not match the energy drop {self.e_i} - {self.e_f}"
            )
        if self.irreversible:
            if not math.isnan(self.i_qc):
                raise ValueError("flagged trials must carry i_qc = nan")
        elif not math.isfinite(self.i_qc):
            raise ValueError(f"unflagged trials need finite i_qc, got {self.i_qc}")
