"""End-to-end smoke checks of the python module and the CLI binary."""

import json
import math
import os
import subprocess
import sys
import tempfile

import _kirchlab as kl


def test_lattice_and_arithmetic():
    lat = kl.Lattice.build(1, 16)
    assert lat.num_shells == 4
    assert kl.squarefree_decompose(12) == (2, 3)
    assert (1, 1, 4) in kl.resonant_triples(lat)


def test_chain_round_trip():
    lat = kl.Lattice.build(1, 64)
    data = kl.make_nonresonant("power-decay", lat, 0.05)
    assert abs(data["c0"] - 1.0 / 3.0) < 1e-15
    nf = kl.NormalForm(lat)
    uv = nf.chain_forward(data["state"])
    back = nf.chain_inverse(uv)
    err = max(abs(data["state"].a[k] - back.a.get(k, 0)) for k in data["state"].a)
    assert err < 1e-12


def test_effective_run_conserves():
    lat = kl.Lattice.build(1, 16)
    pair = kl.ConjugatePair(lat, {(1,): 0.1, (-1,): 0.05 + 0.02j, (2,): 0.03})
    out = kl.effective_run(pair, dt=0.01, T=2.0, stride=10)
    lam = [math.sqrt(n) for n in kl.Lattice.build(1, 16).shell_keys()]
    w0 = sum(l * s for l, s in zip(lam, out["S"][0]))
    w1 = sum(l * s for l, s in zip(lam, out["S"][-1]))
    assert abs(w1 - w0) <= 1e-10 * w0


def test_fit_scaling():
    exp, width = kl.fit_scaling([(0.1, 0.01), (0.05, 0.0025)])
    assert abs(exp - 2.0) < 1e-12


def test_cli_nonres_and_transform(cli):
    with tempfile.TemporaryDirectory() as tmp:
        state = os.path.join(tmp, "data.state")
        cert = os.path.join(tmp, "cert.json")
        r = subprocess.run(
            [cli, "nonres", "make", "--kind", "power-decay", "--d", "1", "--n-max", "16",
             "--epsilon", "0.05", "--out-file", state, "--cert", cert],
            capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        with open(cert) as f:
            c = json.load(f)
        assert c["c0_exact"] == "1/3"

        r = subprocess.run([cli, "nonres", "check", "--in", state, "--c0", "0.333"],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        assert json.loads(r.stdout.split("wrote")[0])["pass"]

        out_state = os.path.join(tmp, "uv.state")
        report = os.path.join(tmp, "report.json")
        r = subprocess.run(
            [cli, "transform", "--in", state, "--stage", "full", "--dir", "forward",
             "--out-file", out_state, "--report", report],
            capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        with open(report) as f:
            rep = json.load(f)
        assert rep["round_trip_error"] < 1e-9

        # config error exit code
        cfg = os.path.join(tmp, "bad.cfg")
        with open(cfg, "w") as f:
            f.write("bogus.key = 1\n")
        r = subprocess.run([cli, "effective", "--config", cfg, "--out", tmp],
                           capture_output=True, text=True)
        assert r.returncode == 2

        # certification failure exit code
        r = subprocess.run([cli, "nonres", "check", "--in", state, "--c0", "0.999"],
                           capture_output=True, text=True)
        assert r.returncode == 3

        # numeric abort exit code (CFL guard)
        cfg_dt = os.path.join(tmp, "dt.cfg")
        with open(cfg_dt, "w") as f:
            f.write("lattice.d = 1\nlattice.n_max = 16\ndata.kind = power-decay\n"
                    "run.mode = physical\nrun.epsilons = 0.1\nrun.T = 1\nrun.dt = 0.9\n")
        r = subprocess.run([cli, "simulate", "--config", cfg_dt, "--out", tmp],
                           capture_output=True, text=True)
        assert r.returncode == 4

        # smoke experiment through the CLI
        cfg2 = os.path.join(tmp, "ok.cfg")
        with open(cfg2, "w") as f:
            f.write("lattice.d = 1\nlattice.n_max = 16\ndata.kind = power-decay\n"
                    "run.mode = effective\nrun.epsilons = 0.1\nrun.T = 1.0\nseed = 1\n")
        outdir = os.path.join(tmp, "exp")
        r = subprocess.run([cli, "effective", "--config", cfg2, "--out", outdir],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        with open(os.path.join(outdir, "manifest.json")) as f:
            manifest = json.load(f)
        assert manifest["runs"][0]["certificate_c0"] > 0.33


def main():
    cli = sys.argv[1] if len(sys.argv) > 1 else None
    failures = 0
    tests = [test_lattice_and_arithmetic, test_chain_round_trip,
             test_effective_run_conserves, test_fit_scaling]
    for t in tests:
        try:
            t()
            print(f"[ok] {t.__name__}")
        except Exception as e:  # noqa: BLE001
            failures += 1
            print(f"[FAIL] {t.__name__}: {e}")
    if cli:
        try:
            test_cli_nonres_and_transform(cli)
            print("[ok] test_cli_nonres_and_transform")
        except Exception as e:  # noqa: BLE001
            failures += 1
            print(f"[FAIL] test_cli_nonres_and_transform: {e}")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
