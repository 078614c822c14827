import sys
from pathlib import Path

import fire
from loguru import logger

from vbnet.config.interface import ExperimentConfig, is_config_key, load_config
from vbnet.config.log import setting_log
from vbnet.config.settings import (
    LOG_FILE,
    LOG_LEVEL,
    OUTPUT_DIR,
    RUN_INFO,
    WORKERS,
    WORKERS_SETTING,
)
from vbnet.errors import ConfigurationError, UsageError, VbnetError
from vbnet.helper import as_float_list, json_dump, str2list

# CLI spellings that differ from the config keys
_ALIASES = {"units": "n_units"}

USAGE = (
    "usage: vbnet {gen-data,train,eval,identify,case-a,case-b,grad-check,report} "
    "[--config FILE] [--<key> VALUE ...]"
)


def _config(config=None, **overrides) -> ExperimentConfig:
    overrides = {_ALIASES.get(k, k): v for k, v in overrides.items()}
    unknown = [k for k in overrides if not is_config_key(k)]
    if unknown:
        raise UsageError(f"unknown flag(s): {', '.join('--' + k for k in unknown)}")
    defaults = {} if WORKERS_SETTING is None else {"workers": WORKERS_SETTING}
    return load_config(config, defaults=defaults, **overrides)


def _out_dir(out, default: str) -> Path:
    path = Path(out) if out else OUTPUT_DIR / default
    path.mkdir(parents=True, exist_ok=True)
    return path


class Cli:
    def __init__(self):
        setting_log(LOG_LEVEL, LOG_FILE, multi_process=WORKERS > 1)

    def gen_data(self, config=None, out=None, **overrides):
        """
        Simulates the fleet and writes one CSV per unit, env.csv and manifest.json.

        Args:
            config (str): Experiment config file (JSON or YAML).
            out (str): Output directory; defaults to <VBNET_OUTPUT_DIR>/data.
            **overrides: Individual config keys, e.g. --units 4 --days 92 --seed 7.
        """
        from vbnet.data.dataset import write_dataset
        from vbnet.data.weather import export_env_csv
        from vbnet.experiments.pipeline import prepare_fleet
        from vbnet.physics.thermal import check_trajectory

        cfg = _config(config, **overrides)
        data, split = prepare_fleet(cfg)
        for unit, traj in zip(data.fleet.units, data.trajectories):
            check_trajectory(unit, traj)
        out_dir = _out_dir(out, "data")
        write_dataset(data, out_dir, cfg, split)
        export_env_csv(data.env, out_dir / "env.csv")
        print(f"wrote {len(data.trajectories)} unit CSVs and manifest.json to {out_dir}")

    def train(self, config=None, data=None, out=None, model="vbnet", **overrides):
        """
        Trains one model and saves a checkpoint.

        Args:
            config (str): Experiment config file.
            data (str): Dataset directory written by gen-data; simulated afresh when omitted.
            out (str): Output directory; defaults to <VBNET_OUTPUT_DIR>/train.
            model (str): vbnet, dense, conv or recurrent.
        """
        from vbnet.experiments.pipeline import save_model, train_model

        cfg = _config(config, **overrides)
        fleet_data, split = self._load_data(cfg, data)
        trainer, history = train_model(
            model, len(fleet_data.fleet), cfg, split.train_samples(), split.stats
        )
        path = save_model(
            _out_dir(out, "train") / f"{model}.msgpack",
            model,
            trainer.model,
            cfg,
            split.stats,
            len(fleet_data.fleet),
        )
        print(
            f"{model}: {history.epochs_run} epochs, best {history.monitored} "
            f"{history.best_monitor:.3e}, checkpoint {path}"
        )

    def eval(self, checkpoint, data=None, out=None):
        """
        Scores a checkpoint on the chronological test split (RMSE and R² per unit).
        """
        from vbnet.experiments.metrics import r2_or_none, rmse
        from vbnet.experiments.pipeline import load_model
        from vbnet.model.trainer import Trainer

        kind, model, cfg, stats = load_model(checkpoint)
        fleet_data, split = self._load_data(cfg, data)
        trainer = Trainer(model, cfg, name=kind)
        result = {"model": kind, "units": {}}
        for unit in fleet_data.fleet.units:
            test = split.test[unit.id]
            if not test:
                continue
            pred = trainer.predict(test, stats)
            truth = [s.S_true for s in test]
            result["units"][unit.name] = {"rmse": rmse(pred, truth), "r2": r2_or_none(pred, truth)}
        path = _out_dir(out, "eval") / f"eval_{kind}.json"
        json_dump(result, path, indent_2=True)
        worst = max((u["rmse"] for u in result["units"].values()), default=float("nan"))
        print(f"{kind}: worst per-unit test RMSE {worst:.3e} ({path})")

    def identify(self, checkpoint, data=None, out=None):
        """
        Writes the identified battery parameters (capacity, loss series over the test
        horizons, sensitivity) of every unit.
        """
        from vbnet.experiments.pipeline import load_model
        from vbnet.model.vbnet import identify

        kind, model, cfg, stats = load_model(checkpoint)
        if kind != "vbnet":
            raise ConfigurationError("checkpoint", f"{kind} models identify no battery parameters")
        _, split = self._load_data(cfg, data)
        params = identify(model, split.test_samples(), stats)
        path = _out_dir(out, "identify") / "identified.json"
        json_dump([p.to_report() for _, p in sorted(params.items())], path, indent_2=True)
        print(f"identified {len(params)} units ({path})")

    def case_a(self, config=None, out=None, **overrides):
        """
        Runs the four-unit comparison of VB-NET against the black-box baselines.
        """
        from vbnet.console import print_report
        from vbnet.experiments.case_a import run_case_a

        cfg = _config(config, **overrides)
        report = run_case_a(cfg, _out_dir(out, "case_a"))
        print_report(report.to_dict())

    def case_b(self, config=None, mature=3, alphas=None, methods="STL,MTL", out=None, **overrides):
        """
        Runs the cold-start grid.

        Args:
            mature (int): Number of fully observed units (3 or 7).
            alphas (str): Comma-separated data ratios of the new unit.
            methods (str): Comma-separated subset of STL,MTL.
        """
        from vbnet.console import print_report
        from vbnet.experiments.case_b import DEFAULT_ALPHAS, run_case_b

        cfg = _config(config, **overrides)
        alphas = as_float_list(alphas) or list(DEFAULT_ALPHAS)
        methods = str2list(methods) if isinstance(methods, str) else list(methods)
        report = run_case_b(cfg, int(mature), alphas, methods, _out_dir(out, f"case_b_{mature}"))
        print_report(report.to_dict())

    def grad_check(self, config=None, points=10, max_entries=8, tol=1e-4, **overrides):
        """
        Checks every primitive and the full composite loss against finite differences;
        exits with status 1 when the max relative error exceeds ``tol``.
        """
        from vbnet.experiments.gradients import gradient_report

        cfg = _config(config, **overrides)
        errors = gradient_report(cfg, points=int(points), max_entries=int(max_entries))
        worst_name = max(errors, key=errors.get)
        worst = errors[worst_name]
        print(f"max relative error {worst:.3e} ({worst_name})")
        if worst > tol:
            logger.error(f"gradient check failed: {worst:.3e} > {tol:.0e}")
            sys.exit(1)

    def report(self, path=None):
        """
        Prints a report.json (or the report inside a run directory).
        """
        from vbnet.console import print_report, print_run_info
        from vbnet.experiments.report import load_report

        print_run_info("settings", **RUN_INFO)
        print_report(load_report(path or OUTPUT_DIR / "case_a"))

    @staticmethod
    def _load_data(cfg: ExperimentConfig, data=None):
        from vbnet.data.dataset import read_dataset, split_fleet
        from vbnet.experiments.pipeline import prepare_fleet

        if data is None:
            return prepare_fleet(cfg)
        fleet_data, manifest = read_dataset(data)
        for key in ("seq_len", "rollout_len", "stride"):
            if key in manifest and manifest[key] != getattr(cfg, key):
                raise ConfigurationError(key, f"dataset uses {manifest[key]}, config {getattr(cfg, key)}")
        return fleet_data, split_fleet(fleet_data, cfg)


def main():
    try:
        fire.Fire(Cli)
    except UsageError as e:
        print(f"{USAGE}\n{e}", file=sys.stderr)
        sys.exit(2)
    except VbnetError as e:
        logger.error(str(e))
        sys.exit(1)


if __name__ == "__main__":
    main()
