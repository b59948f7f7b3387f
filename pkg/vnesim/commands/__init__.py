# Command modules: each exposes register_commands(cli)
