"""Planning engine and benchmark harness for participatory urban sensing."""

from ._core import (
    Instance,
    SenseError,
    generate_instance,
    load_instance,
    method_keys,
    plan,
    preset_names,
    run_pipeline,
    save_instance,
)

__all__ = [
    "Instance",
    "SenseError",
    "generate_instance",
    "load_instance",
    "method_keys",
    "plan",
    "preset_names",
    "run_pipeline",
    "save_instance",
]
