"""
Versioned CSV tables and key = value report files.
"""
import csv
import logging

from .errors import ConfigError

logger = logging.getLogger(__name__)

CSV_VERSION = 1


def write_csv(path, kind, fieldnames, rows):
    with open(path, "w", newline='') as f:
        f.write("# gl3v-csv version={0} kind={1}\n".format(CSV_VERSION, kind))
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    logger.info("wrote %d %s rows to %s", len(rows), kind, path)


def read_csv(path):
    """(kind, fieldnames, rows) of a gl3v CSV file."""
    with open(path, "r", newline='') as f:
        first = f.readline()
        if not first.startswith("# gl3v-csv"):
            raise ConfigError("{0}: missing gl3v-csv header".format(path), lineno=1)
        fields = dict(item.split("=", 1) for item in first[len("# gl3v-csv"):].split())
        if int(fields.get("version", -1)) != CSV_VERSION:
            raise ConfigError("{0}: unsupported csv version {1}".format(path, fields.get("version")), lineno=1)
        reader = csv.DictReader(f)
        rows = list(reader)
        return fields.get("kind"), reader.fieldnames, rows


def write_report(path, items):
    """One `key = value` line per item, in the given order."""
    with open(path, "w") as f:
        for key, value in items:
            f.write("{0} = {1}\n".format(key, value))


def read_report(path):
    report = {}
    with open(path, "r") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError("expected key = value", lineno=lineno)
            report[key.strip()] = value.strip()
    return report
