"""Offline structure discovery script."""

from pathlib import Path

import gpc_discovery as gpc

CONFIG_FOLDER = Path("config")

if __name__ == "__main__":
    config_filepath = CONFIG_FOLDER.joinpath(Path(__file__).stem)
    CONFIG = gpc.parsers.ConfigParser(
        filepath=config_filepath.with_suffix(".toml"),
        check_types=True,
        dirs_vars_keys=["OUTPUT_DIR"],
        existing_directory="merge",
    )
    VERBOSE: int = CONFIG["VERBOSE"]
    OUTPUT_DIR = Path(CONFIG["OUTPUT_DIR"])

    gpc.set_verbose_level(VERBOSE)

    settings = CONFIG.to_dict()
    settings["mode"] = "offline"
    settings["output_dir"] = str(OUTPUT_DIR)
    experiment_config = gpc.parsers.build_experiment_config(settings)
    report = gpc.experiments.run_offline(experiment_config)

    if VERBOSE > 0:
        txt = (
            f"Test accuracy: {report['metrics']['accuracy']:.4f} "
            f"({report['runtime_seconds']:.1f} s)"
        )
        print("\n\t" + "-" * len(txt))
        print("\t" + txt)
        print("\t" + "-" * len(txt) + "\n")
