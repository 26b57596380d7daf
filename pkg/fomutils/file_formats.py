#
# On-disk formats for traces, certificates and comparison tables. JSON floats are written with
# repr, which round-trips bit for bit; CSV cells use str, which is the same thing for floats.
#

import csv
import json
import logging
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

from .certify import Certificate
from .errors import ConfigError
from .methods import RunTrace

l = logging.getLogger(__name__)

TRACE_FORMAT = "fomutils-trace"
TRACE_VERSION = 1
TRACE_CSV_HEADER = "# fomutils-trace-csv v1"
TRACE_CSV_COLUMNS = ("k", "f_xhat", "gap", "bound", "residual_Rk", "lambda", "beta", "S", "C", "min_psi",
                     "grad_dual_norm", "f_best", "model")
CERTIFICATE_CSV_HEADER = "# fomutils-certificate-csv v1"
CERTIFICATE_CSV_COLUMNS = ("k", "gap", "bound", "envelope", "residual", "pass")
COMPARE_CSV_HEADER = "# fomutils-compare-csv v1"


def _cell(value):
    return "" if value is None else value


#
# Traces
#

def trace_to_json(trace: RunTrace) -> str:
    data = {"format": TRACE_FORMAT, "version": TRACE_VERSION}
    data.update(trace.to_dict())
    return json.dumps(data, indent=1)


def trace_from_json(text: str) -> RunTrace:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as ex:
        raise ConfigError(f"trace is not valid JSON: {ex}") from ex

    if not isinstance(data, dict) or data.get("format") != TRACE_FORMAT:
        raise ConfigError(f"not a {TRACE_FORMAT} document")
    if data.get("version") != TRACE_VERSION:
        raise ConfigError(f"unsupported trace version {data.get('version')!r}")
    return RunTrace.from_dict(data)


def save_trace(trace: RunTrace, output_path: Union[Path, str]) -> Path:
    output_path = Path(output_path).with_suffix(".json")
    output_path.write_text(trace_to_json(trace), encoding="utf-8")
    l.debug("wrote %d records to %s", len(trace), output_path)
    return output_path


def load_trace(path: Union[Path, str]) -> RunTrace:
    return trace_from_json(Path(path).read_text(encoding="utf-8"))


def save_trace_csv(trace: RunTrace, output_path: Union[Path, str], certificate: Optional[Certificate] = None) -> Path:
    """
    One row per record. gap, bound and residual_Rk come from the certificate and stay empty without one.
    """
    output_path = Path(output_path).with_suffix(".csv")
    gap = bound = residual = None
    if certificate is not None:
        gap, bound, residual = certificate.gap, certificate.bound, certificate.residual

    with open(output_path, "w", encoding="utf-8", newline="") as fp:
        fp.write(TRACE_CSV_HEADER + "\n")
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(TRACE_CSV_COLUMNS)
        for i, r in enumerate(trace.records):
            writer.writerow([
                r.k,
                r.f_xhat,
                _cell(None if gap is None else float(gap[i])),
                _cell(None if bound is None else float(bound[i])),
                _cell(None if residual is None else float(residual[i])),
                r.lambda_k,
                r.beta_k,
                r.S_k,
                r.C_k,
                _cell(r.min_psi),
                r.grad_dual_norm,
                r.f_best,
                r.model,
            ])
    return output_path


#
# Certificates
#

def save_certificate(certificate: Certificate, output_path: Union[Path, str]) -> Tuple[Path, Path]:
    """
    Write <output_path>.json (summary and per-k arrays) and <output_path>.csv (the rate table).
    """
    output_path = Path(output_path)
    json_path = output_path.with_suffix(".json")
    json_path.write_text(json.dumps(certificate.to_dict(), indent=1), encoding="utf-8")

    csv_path = output_path.with_suffix(".csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fp:
        fp.write(CERTIFICATE_CSV_HEADER + "\n")
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(CERTIFICATE_CSV_COLUMNS)
        for k, gap, bound, envelope, residual, ok in certificate.rows():
            writer.writerow([k, _cell(gap), _cell(bound), _cell(envelope), residual, int(ok)])
    return json_path, csv_path


#
# Comparison tables
#

def save_compare_csv(certificates: Sequence[Tuple[str, Certificate]], output_path: Union[Path, str]) -> Path:
    """
    Gap columns for every run, then bound columns, aligned by k. Runs that stopped early leave
    their remaining cells empty.
    """
    output_path = Path(output_path).with_suffix(".csv")
    names = [name for name, _ in certificates]
    if len(set(names)) != len(names):
        raise ConfigError(f"comparison runs need distinct names, got {names}")

    columns: Dict[str, list] = {}
    for name, cert in certificates:
        columns[f"{name}_gap"] = [] if cert.gap is None else [float(v) for v in cert.gap]
    for name, cert in certificates:
        columns[f"{name}_bound"] = [] if cert.bound is None else [float(v) for v in cert.bound]
    length = max((len(cert) for _, cert in certificates), default=0)

    with open(output_path, "w", encoding="utf-8", newline="") as fp:
        fp.write(COMPARE_CSV_HEADER + "\n")
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["k"] + list(columns))
        for k in range(length):
            writer.writerow([k] + [values[k] if k < len(values) else "" for values in columns.values()])
    return output_path


def read_csv_table(path: Union[Path, str]) -> Tuple[str, list]:
    """
    Returns (version header, rows as dicts keyed by column name).
    """
    with open(path, "r", encoding="utf-8", newline="") as fp:
        header = fp.readline().rstrip("\n")
        rows = list(csv.DictReader(fp))
    return header, rows
