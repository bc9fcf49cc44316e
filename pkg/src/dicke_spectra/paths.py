from pathlib import Path

PACKAGE_DIR = Path(__file__).parent.resolve()
PRESETS_DIR = PACKAGE_DIR / "presets"


def get_preset_path(name, presets_dir=PRESETS_DIR):
    return Path(presets_dir) / f"{name}.yml"


def list_presets(presets_dir=PRESETS_DIR):
    return sorted(path.stem for path in Path(presets_dir).glob("*.yml"))
