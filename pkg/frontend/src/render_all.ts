#!/usr/bin/env node
import { runCli } from "./render.js";

process.exit(runCli(process.argv.slice(2)));
