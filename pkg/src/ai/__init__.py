"""Agent gateway: prompts, answer parsing and agents"""
