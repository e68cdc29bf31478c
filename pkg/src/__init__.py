import jax

# Element and coupling kernels need double precision for the FD oracles and tight Newton tolerances.
jax.config.update("jax_enable_x64", True)
