"""Versioned line-oriented text serialization for trained models.

Floats are written with Python's shortest round-trip repr, so a saved and
reloaded model reproduces every decision value bit for bit.  Kernel models
store one ``theta`` line per support vector (coefficient followed by the
vector in index:value syntax); linear models store one ``w`` line per
nonzero weight.
"""

import numpy as np

from .data import Normalizer, SparseVector
from .duals import OdmlParams, OdmParams, SvmParams, TrainedModel
from .kernels import KernelSpec
from .linear import LinearModel

FORMAT_NAME = "odmkit-model"
FORMAT_VERSION = 1

_PARAM_FIELDS = {
    "svm": ("C",),
    "odml": ("C", "lam1", "lam2"),
    "odm": ("C1", "C2", "D"),
}
_PARAM_TYPES = {"svm": SvmParams, "odml": OdmlParams, "odm": OdmParams}


class ModelFormatError(ValueError):
    pass


def _r(x):
    return repr(float(x))


def _array_line(key, arr):
    return " ".join([key] + [_r(v) for v in arr])


def save_model(model, path):
    lines = [f"{FORMAT_NAME} {FORMAT_VERSION}"]
    kernelized = isinstance(model, TrainedModel)
    lines.append(f"model_type {'kernel' if kernelized else 'linear'}")
    lines.append(f"variant {model.variant}")
    if kernelized:
        lines.append(f"kernel {model.kernel.kind}")
        if model.kernel.kind == "rbf":
            lines.append(f"width {_r(model.kernel.width)}")
    for name in _PARAM_FIELDS[model.variant]:
        lines.append(f"param {name} {_r(getattr(model.params, name))}")
    lines.append(f"dim {model.dim}")
    if model.normalizer is not None:
        lines.append(_array_line("normalizer_min", model.normalizer.feature_min))
        lines.append(_array_line("normalizer_max", model.normalizer.feature_max))
    lines.append(f"objective {_r(model.objective)}")
    if kernelized:
        lines.append(f"n_train {model.n_train}")
        lines.append(f"converged {int(model.converged)}")
        lines.append(f"m_support {len(model.support_vectors)}")
        for coef, sv in zip(model.theta, model.support_vectors):
            entries = " ".join(f"{i}:{_r(v)}" for i, v in zip(sv.indices, sv.values))
            lines.append(f"theta {_r(coef)} {entries}".rstrip())
        if model.alpha is not None:
            lines.append(_array_line("alpha", model.alpha))
        if model.dual_diag is not None:
            lines.append(_array_line("dual_diag", model.dual_diag))
        if model.self_kernel is not None:
            lines.append(_array_line("self_kernel", model.self_kernel))
    else:
        lines.append(f"stages_run {model.stages_run}")
        lines.append(f"heuristic {int(model.heuristic)}")
        for j in np.flatnonzero(model.w != 0.0):
            lines.append(f"w {j + 1} {_r(model.w[j])}")
    lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_sparse_entries(tokens):
    idx = np.array([int(t.partition(":")[0]) for t in tokens], dtype=np.int64)
    val = np.array([float(t.partition(":")[2]) for t in tokens], dtype=np.float64)
    return SparseVector(idx, val)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith(FORMAT_NAME):
        raise ModelFormatError("not a model file")
    version = lines[0].split()[1]
    if int(version) != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}")

    header = {}
    thetas, supports, w_entries = [], [], []
    arrays = {}
    for ln in lines[1:]:
        if not ln.strip():
            continue
        key, _, rest = ln.partition(" ")
        if key == "end":
            break
        if key == "theta":
            tokens = rest.split()
            thetas.append(float(tokens[0]))
            supports.append(_parse_sparse_entries(tokens[1:]))
        elif key == "w":
            j, v = rest.split()
            w_entries.append((int(j), float(v)))
        elif key == "param":
            name, _, val = rest.partition(" ")
            header.setdefault("params", {})[name] = float(val)
        elif key in ("normalizer_min", "normalizer_max", "alpha", "dual_diag", "self_kernel"):
            arrays[key] = np.array([float(t) for t in rest.split()], dtype=np.float64)
        else:
            header[key] = rest
    else:
        raise ModelFormatError("missing end marker")

    try:
        variant = header["variant"]
        param_cls = _PARAM_TYPES[variant]
        params = param_cls(*(header["params"][n] for n in _PARAM_FIELDS[variant]))
        dim = int(header["dim"])
        objective = float(header["objective"])
    except KeyError as e:
        raise ModelFormatError(f"missing field {e}") from None

    normalizer = None
    if "normalizer_min" in arrays or "normalizer_max" in arrays:
        normalizer = Normalizer(arrays["normalizer_min"], arrays["normalizer_max"])

    try:
        if header["model_type"] == "kernel":
            kind = header["kernel"]
            spec = KernelSpec(kind, float(header["width"]) if kind == "rbf" else None)
            if len(thetas) != int(header["m_support"]):
                raise ModelFormatError("support vector count mismatch")
            return TrainedModel(
                variant=variant,
                kernel=spec,
                params=params,
                support_vectors=supports,
                theta=np.array(thetas, dtype=np.float64),
                normalizer=normalizer,
                dim=dim,
                n_train=int(header["n_train"]),
                converged=bool(int(header["converged"])),
                objective=objective,
                alpha=arrays.get("alpha"),
                dual_diag=arrays.get("dual_diag"),
                self_kernel=arrays.get("self_kernel"),
            )
        if header["model_type"] == "linear":
            w = np.zeros(dim)
            for j, v in w_entries:
                if not 1 <= j <= dim:
                    raise ModelFormatError(f"weight index {j} outside dim {dim}")
                w[j - 1] = v
            return LinearModel(
                variant=variant,
                params=params,
                w=w,
                normalizer=normalizer,
                dim=dim,
                objective=objective,
                stages_run=int(header["stages_run"]),
                heuristic=bool(int(header["heuristic"])),
            )
    except KeyError as e:
        raise ModelFormatError(f"missing field {e}") from None
    raise ModelFormatError(f"unknown model type {header['model_type']!r}")
