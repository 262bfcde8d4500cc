"""
Unit tests for JSON-lines run logging.
"""

import json
import logging
import os
import sys
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from infra.logging.json_logging import JSONFormatter, setup_logging, teardown_logging


def _record(msg="epoch_completed", **extra):
    record = logging.LogRecord("core.training.trainer", logging.INFO, __file__, 1, msg, None, None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


class TestJSONFormatter(unittest.TestCase):

    def test_extra_fields_at_top_level(self):
        payload = json.loads(JSONFormatter().format(_record(epoch=3, train_loss=np.float64(0.25))))
        self.assertEqual(payload["message"], "epoch_completed")
        self.assertEqual(payload["logger"], "core.training.trainer")
        self.assertEqual(payload["level"], "INFO")
        self.assertEqual(payload["epoch"], 3)
        self.assertEqual(payload["train_loss"], 0.25)
        self.assertIn("timestamp", payload)

    def test_numpy_and_paths_serialized(self):
        payload = json.loads(JSONFormatter().format(_record(values=np.array([1, 2]), path=Path("out/x"))))
        self.assertEqual(payload["values"], [1, 2])
        self.assertEqual(payload["path"], os.path.join("out", "x"))

    def test_standard_attributes_left_out(self):
        payload = json.loads(JSONFormatter().format(_record()))
        for key in ("args", "msg", "lineno", "pathname", "created"):
            self.assertNotIn(key, payload)

    def test_exception_text(self):
        try:
            raise ValueError("boom")
        except ValueError:
            record = _record()
            record.exc_info = sys.exc_info()
        payload = json.loads(JSONFormatter().format(record))
        self.assertIn("ValueError: boom", payload["exception"])


class TestSetupLogging(unittest.TestCase):

    def tearDown(self):
        teardown_logging()

    def test_records_written_as_json_lines(self):
        with TemporaryDirectory() as tmp:
            log_file = setup_logging(Path(tmp) / "logs", name="train", console=False)
            logging.getLogger("milseq.test").info("command_started", extra={"command": "train"})
            teardown_logging()
            lines = log_file.read_text().splitlines()
            self.assertTrue(log_file.name.startswith("train_"))
            entry = json.loads(lines[-1])
            self.assertEqual(entry["message"], "command_started")
            self.assertEqual(entry["command"], "train")

    def test_repeated_setup_does_not_duplicate_handlers(self):
        with TemporaryDirectory() as tmp:
            setup_logging(tmp, console=True)
            setup_logging(tmp, console=True)
            ours = [h for h in logging.getLogger().handlers if getattr(h, "_milseq_handler", False)]
            self.assertEqual(len(ours), 2)
            teardown_logging()
            ours = [h for h in logging.getLogger().handlers if getattr(h, "_milseq_handler", False)]
            self.assertEqual(ours, [])


if __name__ == '__main__':
    unittest.main()
