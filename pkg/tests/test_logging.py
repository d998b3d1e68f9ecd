import json
import logging

from logging_config import HumanReadableFormatter, JSONFormatter, setup_logging
from utils.logger import ExecutionTimer, PhaseFilter, RunIDFilter


def _record(message="Epoch 1/30: total 0.41", **extra):
    record = logging.LogRecord("training.trainer", logging.INFO, __file__, 1, message, None, None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


def test_json_formatter_merges_extra_data():
    record = _record(extra_data={"epoch": 1, "total": 0.41})
    RunIDFilter("abcdef12-3456").filter(record)
    PhaseFilter("train").filter(record)

    payload = json.loads(JSONFormatter().format(record))
    assert payload["message"] == "Epoch 1/30: total 0.41"
    assert payload["logger"] == "training.trainer"
    assert payload["run_id"] == "abcdef12-3456"
    assert payload["phase"] == "train"
    assert payload["epoch"] == 1
    assert payload["timestamp"].endswith("Z")


def test_human_formatter_shows_context():
    record = _record(run_id="abcdef12-3456", phase="ingest")
    text = HumanReadableFormatter().format(record)
    assert "(abcdef12)" in text
    assert "<ingest>" in text
    assert text.endswith("Epoch 1/30: total 0.41")


def test_setup_logging_writes_json_files(tmp_path):
    root = logging.getLogger()
    saved = list(root.handlers)
    try:
        setup_logging(log_dir=str(tmp_path), level="WARNING", enable_console=False)
        logging.getLogger("data.ingest").warning("Dropped 2 footprint records")
        for handler in root.handlers:
            handler.flush()
        lines = (tmp_path / "dapamt.log").read_text().splitlines()
        assert json.loads(lines[-1])["message"] == "Dropped 2 footprint records"
        assert (tmp_path / "errors.log").read_text() == ""
    finally:
        for handler in list(root.handlers):
            root.removeHandler(handler)
            handler.close()
        for handler in saved:
            root.addHandler(handler)


def test_execution_timer_records_duration(caplog):
    logger = logging.getLogger("tests.timer")
    with caplog.at_level(logging.INFO, logger="tests.timer"):
        with ExecutionTimer(logger, "experiment") as timer:
            pass
    assert timer.duration is not None and timer.duration >= 0
    assert "experiment completed" in caplog.text
