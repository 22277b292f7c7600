"""
Stopping at the first Langford sequence
=======================================

In FIRST mode the main controller keeps one solution and tells every team
to stop; later finds are discarded.
"""

from stealcsp import Mode, build_langford, run_in_process
from stealcsp.models import langford_sequence

problem = build_langford(2, 11)
report = run_in_process(problem, teams=2, workers=2, mode=Mode.FIRST)

print(" ".join(map(str, langford_sequence(report.first_solution, 2, 11))))
print(f"{report.discarded} later solution(s) discarded")
if report.stop_latencies:
    print(f"slowest worker stopped {1000 * max(report.stop_latencies):.3f} ms after STOP")
