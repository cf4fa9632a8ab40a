# pylint: skip-file

import re
import sys
from logging import Handler, LogRecord, getLevelName
from os.path import dirname, join
from typing import List

DATA_DIR = join(dirname(__file__), "data")


class CapturingHandler(Handler):
    def __init__(self) -> None:
        super().__init__()
        self.captured_records: List[LogRecord] = []

    def emit(self, record: LogRecord) -> None:
        self.captured_records.append(record)

    def assert_contains(self, level: int, message_regex: str) -> None:
        for record in self.captured_records:
            if record.levelno == level and re.search(
                message_regex, record.getMessage()
            ):
                return
        print("--- Captured log messages:", file=sys.stderr)
        for record in self.captured_records:
            print(
                "Level:",
                getLevelName(record.levelno),
                "Message:",
                record.getMessage(),
                file=sys.stderr,
            )
        raise AssertionError(
            "Pattern %r was not found with level %r in "
            "the log records" % (message_regex, level)
        )


def data_file(name: str) -> str:
    return join(DATA_DIR, name)
