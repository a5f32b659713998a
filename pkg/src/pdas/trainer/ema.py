"""Mean-teacher bookkeeping: an exponentially averaged copy of the student."""

from __future__ import annotations

from dataclasses import dataclass

from ..model.network import PromptSegModel


def ema_update(teacher: dict, student: dict, momentum: float) -> None:
    """In-place: teacher <- momentum * teacher + (1 - momentum) * student.

    Both arguments are name->Tensor parameter dicts; key sets and shapes
    must agree exactly.
    """
    if teacher.keys() != student.keys():
        extra = set(teacher) ^ set(student)
        raise ValueError(f"parameter sets differ: {sorted(extra)[:5]}")
    for name, t in teacher.items():
        s = student[name]
        if t.data.shape != s.data.shape:
            raise ValueError(
                f"shape mismatch for {name}: {t.data.shape} vs {s.data.shape}"
            )
        t.data *= momentum
        t.data += (1.0 - momentum) * s.data


@dataclass
class TeacherStudent:
    student: PromptSegModel
    teacher: PromptSegModel
    step: int = 0

    @classmethod
    def from_student(cls, student: PromptSegModel, step: int = 0) -> "TeacherStudent":
        return cls(student=student, teacher=student.clone(), step=step)

    def update_teacher(self, momentum: float) -> None:
        ema_update(self.teacher.params, self.student.params, momentum)
