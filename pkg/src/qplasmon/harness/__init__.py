from qplasmon.harness.config import ScenarioConfig, load_config, parse_config_text
from qplasmon.harness.report import RunReport, emit_csv
from qplasmon.harness.scenarios import (RUNNERS, run_analyze, run_angle_scan, run_calibrate,
                                        run_concentration_scan)

__all__ = ["ScenarioConfig", "load_config", "parse_config_text", "RunReport", "emit_csv",
           "RUNNERS", "run_analyze", "run_angle_scan", "run_calibrate", "run_concentration_scan"]
