"""
Episode engine: instance generation, communication, rewards and the
asynchronous multi-agent simulation loop.

Import submodules directly (``maipp.sim.episode``); controllers in
``maipp.planners`` depend on ``maipp.sim.agent``.
"""
