from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

ext = Pybind11Extension(
    "imgrid._core",
    sources=[
        "src/random.cpp",
        "src/net.cpp",
        "src/checkpoint.cpp",
        "src/gridworld.cpp",
        "src/planner.cpp",
        "src/vae.cpp",
        "src/llm_reward.cpp",
        "src/agent.cpp",
        "src/runner.cpp",
        "src/svg.cpp",
        "src/cli.cpp",
        "bindings/module.cpp",
    ],
    include_dirs=["include", "vendor"],
    cxx_std=20,
)
ext.extra_compile_args += ["-pthread"]
ext.extra_link_args += ["-pthread"]

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
