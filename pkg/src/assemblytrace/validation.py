"""Issue/report containers used by the asset, schedule, and annotation validators."""

from __future__ import annotations

from dataclasses import dataclass, field

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"


@dataclass(frozen=True)
class Issue:
    severity: str
    code: str
    message: str
    node_id: int | None = None


@dataclass
class ValidationReport:
    """Collected validation issues; ``ok`` iff no error-severity issue."""

    issues: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(i.severity == SEVERITY_ERROR for i in self.issues)

    def error(self, code: str, message: str, node_id: int | None = None) -> None:
        self.issues.append(Issue(SEVERITY_ERROR, code, message, node_id))

    def warning(self, code: str, message: str, node_id: int | None = None) -> None:
        self.issues.append(Issue(SEVERITY_WARNING, code, message, node_id))

    def extend(self, other: "ValidationReport") -> None:
        self.issues.extend(other.issues)

    def codes(self) -> list[str]:
        return [i.code for i in self.issues]

    def escalate_warnings(self) -> "ValidationReport":
        """Return a copy with every warning promoted to an error (strict mode)."""
        return ValidationReport(
            [Issue(SEVERITY_ERROR, i.code, i.message, i.node_id) for i in self.issues]
        )

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "issues": [
                {
                    "severity": i.severity,
                    "code": i.code,
                    "message": i.message,
                    "node_id": i.node_id,
                }
                for i in self.issues
            ],
        }
