# tasks.py

from invoke import task

CONFIGS = "configs"


@task
def test(ctx):
    """
    Run the test suite.
    """
    ctx.run("pytest --maxfail=1 --disable-warnings -q", pty=True)


@task
def field(ctx, config=f"{CONFIGS}/field_frame.ini", out=None):
    """
    Evaluate the gravitomagnetic field for a scenario.
    """
    extra = f" --out {out}" if out else ""
    ctx.run(f"python -m spinphase.cli.main field {config}{extra}", pty=True)


@task
def evolve(ctx, config=f"{CONFIGS}/conical_fast.ini", out=None):
    """
    Solve a spin scenario and cross-check it against direct integration.
    """
    extra = f" --out {out}" if out else ""
    ctx.run(f"python -m spinphase.cli.main evolve {config}{extra}", pty=True)


@task
def sweep(ctx, config=f"{CONFIGS}/sweep_berry.ini", out=None):
    """
    Run a parameter sweep.
    """
    extra = f" --out {out}" if out else ""
    ctx.run(f"python -m spinphase.cli.main sweep {config}{extra}", pty=True)


@task
def acceptance(ctx, out="output/acceptance"):
    """
    Run every sample scenario; stops at the first non-zero exit.
    """
    for name in ("constant_axis", "constant_constraint", "conical_slow", "conical_fast", "modulated", "sampled"):
        ctx.run(f"python -m spinphase.cli.main evolve {CONFIGS}/{name}.ini --out {out} --quiet", pty=True)
    for name in ("field_frame", "field_kerr", "field_earth"):
        ctx.run(f"python -m spinphase.cli.main field {CONFIGS}/{name}.ini --out {out} --quiet", pty=True)
    for name in ("sweep_berry", "sweep_response"):
        ctx.run(f"python -m spinphase.cli.main sweep {CONFIGS}/{name}.ini --out {out} --quiet", pty=True)
