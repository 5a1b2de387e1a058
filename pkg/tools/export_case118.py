"""Write the IEEE 118-bus case bundled with PYPOWER as MATPOWER ``.m`` text.

Run once by a maintainer; the output is checked in at
``src/seasonal_voltage/data/case118.m``. PYPOWER is a dev-only dependency.
"""

import sys
from pathlib import Path

import numpy as np
from pypower.case118 import case118


def _block(name, arr, header):
    lines = [f"%% {header}", f"mpc.{name} = ["]
    for row in np.asarray(arr):
        lines.append("\t" + "\t".join(f"{v:.10g}" for v in row) + ";")
    lines.append("];")
    return "\n".join(lines)


def main(out):
    c = case118()
    text = [
        "function mpc = case118",
        "%CASE118    Power flow data for IEEE 118 bus test case.",
        "",
        "%% MATPOWER Case Format : Version 2",
        "mpc.version = '2';",
        "",
        "%%-----  Power Flow Data  -----%%",
        "%% system MVA base",
        f"mpc.baseMVA = {c['baseMVA']:g};",
        "",
        _block("bus", c["bus"], "bus data\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin"),
        "",
        _block("gen", c["gen"], "generator data\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\tPc1\tPc2\tQc1min\tQc1max\tQc2min\tQc2max\tramp_agc\tramp_10\tramp_30\tramp_q\tapf"),
        "",
        _block("branch", c["branch"], "branch data\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax"),
        "",
        "%%-----  OPF Data  -----%%",
        _block("gencost", c["gencost"], "generator cost data\n%\t1\tstartup\tshutdown\tn\tx1\ty1\t...\txn\tyn\n%\t2\tstartup\tshutdown\tn\tc(n-1)\t...\tc0"),
        "",
    ]
    Path(out).write_text("\n".join(text))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/seasonal_voltage/data/case118.m")
