"""Command-line behavior: exit codes, output shape, artifact files.

Covered here:

* `enumerate` lists the family with the noise symbol first and embeds the
  config fingerprint in the header,
* `coproduct` routes plus-sector inputs to the plus-coproduct and the rest
  to the coaction, printing tab-separated tensor lines,
* `renormalize` composes with a chi table written by `bphz-estimate`,
* `check-rule` exits 1 when the variance condition fails and 0 otherwise,
* `verify` harnesses run and report their config hash,
* configuration mistakes (missing --chi, bad expressions, absent config
  files) exit with code 2 and an error on stderr.
"""

import json

import pytest

from bphzkit.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out.splitlines(), captured.err


class TestEnumerate:
    def test_lists_family_with_noise_first(self, capsys):
        code, lines, _ = run(capsys, ["enumerate", "--preset", "gpam_2"])
        assert code == EXIT_OK
        assert lines[0] == (
            "tree family for rule gpam_2"
            " (d=2, eps=0, p=inf, config ab16260ff8e3)"
        )
        assert lines[1] == "B (8):"
        assert lines[2].split() == ["-101/100", "O"]

    def test_writes_artifact(self, capsys, tmp_path):
        code, lines, _ = run(
            capsys,
            ["enumerate", "--preset", "gpam_2", "--out", str(tmp_path)],
        )
        assert code == EXIT_OK
        text = (tmp_path / "enumerate.txt").read_text()
        assert text.splitlines() == lines


class TestCoproduct:
    def test_coaction_route(self, capsys):
        code, lines, _ = run(
            capsys, ["coproduct", "--preset", "gpam_2", "I[K,(0,1,0)](O)"]
        )
        assert code == EXIT_OK
        assert lines[0] == "coaction of I[K,(0,1,0)](O) at eps=0, p=inf:"
        assert lines[1] == "  1\tI[K,(0,1,0)](O)\tX^(0,0,0)"

    def test_plus_route_monomial(self, capsys):
        code, lines, _ = run(
            capsys, ["coproduct", "--preset", "gpam_2", "X^(0,2,0)"]
        )
        assert code == EXIT_OK
        assert lines[0] == "plus-coproduct of X^(0,2,0) at eps=0, p=inf:"
        assert lines[1:] == [
            "  1\tX^(0,0,0)\tX^(0,2,0)",
            "  2\tX^(0,1,0)\tX^(0,1,0)",
            "  1\tX^(0,2,0)\tX^(0,0,0)",
        ]

    def test_bad_expression_is_config_error(self, capsys):
        code, _, err = run(
            capsys, ["coproduct", "--preset", "gpam_2", "I[Q,(0,0)](O)"]
        )
        assert code == EXIT_CONFIG
        assert "unknown edge label" in err


class TestEstimateAndRenormalize:
    def test_estimate_then_renormalize(self, capsys, tmp_path):
        code, _, _ = run(
            capsys,
            [
                "bphz-estimate",
                "--preset",
                "gpam_2",
                "--samples",
                "40",
                "--seed",
                "6",
                "--out",
                str(tmp_path),
            ],
        )
        assert code == EXIT_OK
        chi_path = tmp_path / "chi.json"
        payload = json.loads(chi_path.read_text())
        assert set(payload) == {"config", "rule", "stderrs", "values"}
        assert list(payload["values"]) == ["I[K,(0,0,0)](O)*O"]

        code, lines, _ = run(
            capsys,
            [
                "renormalize",
                "--preset",
                "gpam_2",
                "--chi",
                str(chi_path),
                "I[K,(0,0,0)](O)*O",
            ],
        )
        assert code == EXIT_OK
        assert lines[0] == "renormalized I[K,(0,0,0)](O)*O with chi on 1 trees:"
        # identity part plus the extracted constant
        assert len(lines) == 3
        value = payload["values"]["I[K,(0,0,0)](O)*O"]
        assert lines[2].split()[0] == f"{value:.12g}"
        assert lines[2].split()[1] == "X^(0,0,0)"

    def test_renormalize_requires_chi(self, capsys):
        code, _, err = run(
            capsys, ["renormalize", "--preset", "gpam_2", "I[K,(0,0,0)](O)*O"]
        )
        assert code == EXIT_CONFIG
        assert "--chi" in err


class TestCheckRule:
    def test_preset_passes(self, capsys):
        code, lines, _ = run(capsys, ["check-rule", "--preset", "gpam_2"])
        assert code == EXIT_OK
        assert "status: PASS" in lines

    def test_variance_blowup_fails(self, capsys, tmp_path):
        cfg = tmp_path / "blowup.json"
        cfg.write_text(
            json.dumps(
                {
                    "rule": {
                        "name": "blowup",
                        "d": 2,
                        "productions": [[0, 0], [1, 0], [0, 1], [0, 2]],
                    },
                    "params": {
                        "r0": "-299/100",
                        "beta0": "199/100",
                        "C0": "1",
                    },
                }
            )
        )
        code, lines, _ = run(capsys, ["check-rule", "--config", str(cfg)])
        assert code == EXIT_FAIL
        assert "status: FAIL" in lines
        assert any("violator" in line and "degree -2" in line for line in lines)

    def test_missing_config_file(self, capsys):
        code, _, err = run(capsys, ["check-rule", "--config", "absent.json"])
        assert code == EXIT_CONFIG
        assert "cannot read config" in err


class TestVerify:
    def test_commutation_harness(self, capsys, tmp_path):
        code, lines, _ = run(
            capsys,
            ["verify", "commutation", "--preset", "gpam_2", "--out", str(tmp_path)],
        )
        assert code == EXIT_OK
        assert lines[0] == "experiment: renorm-relabel-commutation"
        assert lines[1].startswith("config-hash: ")
        report = json.loads(
            (tmp_path / "renorm-relabel-commutation.json").read_text()
        )
        assert report["passed"] is True
        assert len(report["rows"]) == 10

    def test_unknown_harness_rejected(self, capsys):
        with pytest.raises(SystemExit):
            main(["verify", "prop52", "--preset", "gpam_2"])
