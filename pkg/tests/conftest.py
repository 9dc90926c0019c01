import numpy as np

# acceptance tests append (criterion_id, passed, line) triples here; the
# terminal-summary hook below replays them outside pytest's capture so every
# criterion shows one visible verdict line even when its test passed
ACCEPTANCE_VERDICTS = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _cid, ok, line in ACCEPTANCE_VERDICTS:
        terminalreporter.write_line(line, green=ok, red=not ok)


def fd_jacobian(func, x, h=1e-6):
    """Central-difference Jacobian of ``func`` at ``x`` (oracle for tests)."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(func(x), dtype=float)
    J = np.zeros((f0.size, x.size))
    for j in range(x.size):
        step = h * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += step
        xm[j] -= step
        J[:, j] = (np.asarray(func(xp)) - np.asarray(func(xm))) / (2 * step)
    return J
