"""Health-aware optimal power flow for microgrids via semidefinite relaxation."""
from .formulation import ConicProblem, assemble
from .health import (DeratedLimits, FaultTable, HealthProfile, MappingMode, derate,
                     load_fault_tables, network_limits, table_defaults)
from .network import Network, load_case, mg3
from .oracle import OracleSettings, newton_pf, oracle_dispatch
from .recovery import DispatchResult, DispatchStatus, exactness, recover_voltages, run_opf, verify
from .solver import ConicSolution, SolverSettings, Status, check_certificate, solve

__version__ = "0.1.0"

__all__ = [
    "ConicProblem", "ConicSolution", "DeratedLimits", "DispatchResult", "DispatchStatus",
    "FaultTable", "HealthProfile", "MappingMode", "Network", "OracleSettings", "SolverSettings",
    "Status", "assemble", "check_certificate", "derate", "exactness", "load_case",
    "load_fault_tables", "mg3", "network_limits", "newton_pf", "oracle_dispatch",
    "recover_voltages", "run_opf", "solve", "table_defaults", "verify",
]
