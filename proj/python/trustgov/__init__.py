"""Trust-governance engine: adaptive risk/trust metrics, policy-matrix
gating and selection, tamper-evident ledger verification, and the
convergence/performance experiment entry points."""

from trustgov._core import (  # noqa: F401
    CandidateReport,
    PolicyMatrix,
    admit,
    contextual_trust,
    decide,
    domain_trigger,
    ecosystem_metrics,
    env_risk_capacity,
    env_risk_continuous,
    env_risk_hazard,
    erlang_c,
    erlang_c_wait_s,
    feedback,
    hrt_update,
    joint_actuation,
    mae,
    mmc_project,
    overall_risk,
    overall_trust,
    reputation_trust,
    run_convergence,
    select,
    service_risk,
    verify_chain,
    wilcoxon_signed_rank,
)

__all__ = [
    "CandidateReport",
    "PolicyMatrix",
    "admit",
    "contextual_trust",
    "decide",
    "domain_trigger",
    "ecosystem_metrics",
    "env_risk_capacity",
    "env_risk_continuous",
    "env_risk_hazard",
    "erlang_c",
    "erlang_c_wait_s",
    "feedback",
    "hrt_update",
    "joint_actuation",
    "mae",
    "mmc_project",
    "overall_risk",
    "overall_trust",
    "reputation_trust",
    "run_convergence",
    "select",
    "service_risk",
    "verify_chain",
    "wilcoxon_signed_rank",
]
