from .harness import ScenarioConfig, SimReport, run_scenario, verify_log

__all__ = ["ScenarioConfig", "SimReport", "run_scenario", "verify_log"]
