# Workflows package: one get_pipeline(config, out_dir) per subcommand
