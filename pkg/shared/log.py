import logging
import os


def setup_logging(out_dir="output", file_name="casimir_friction.log", level="INFO"):
    os.makedirs(out_dir, exist_ok=True)
    filename = os.path.join(out_dir, file_name)
    logging.basicConfig(
        filename=filename,
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    return filename


def log(step, **values):
    fields = ", ".join(f"{key}={value!r}" for key, value in values.items())
    logging.getLogger("casimir_friction").info(f"Row {step + 1}, {fields}")
