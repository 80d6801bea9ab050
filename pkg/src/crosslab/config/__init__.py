from .run import RunConfig, load_config, save_config, dump_config  # noqa
